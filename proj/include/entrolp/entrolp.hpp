#pragma once

// Umbrella header for the entrolp library: linear optimization over
// products of probability simplices under an averaged Kullback-Leibler
// constraint.

#include "entrolp/attain.hpp"
#include "entrolp/ba.hpp"
#include "entrolp/bpg.hpp"
#include "entrolp/core.hpp"
#include "entrolp/entropy.hpp"
#include "entrolp/errors.hpp"
#include "entrolp/generators.hpp"
#include "entrolp/io.hpp"
#include "entrolp/lagrange.hpp"
#include "entrolp/oracle.hpp"
#include "entrolp/tensor.hpp"
