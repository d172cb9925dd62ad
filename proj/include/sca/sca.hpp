#pragma once

#include "sca/dataset.hpp"
#include "sca/error.hpp"
#include "sca/io.hpp"
#include "sca/library.hpp"
#include "sca/markov_kernel.hpp"
#include "sca/nystrom.hpp"
#include "sca/prototypes.hpp"
#include "sca/regression.hpp"
#include "sca/rng.hpp"
#include "sca/simplex.hpp"
#include "sca/spectral.hpp"
#include "sca/synthetic.hpp"
