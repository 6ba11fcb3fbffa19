#pragma once

#include "nlkit/autodiff.hpp"
#include "nlkit/core.hpp"
#include "nlkit/descent.hpp"
#include "nlkit/dual.hpp"
#include "nlkit/error.hpp"
#include "nlkit/globalize.hpp"
#include "nlkit/jacobian.hpp"
#include "nlkit/linalg.hpp"
#include "nlkit/problems.hpp"
#include "nlkit/quasinewton.hpp"
#include "nlkit/sensitivity.hpp"
#include "nlkit/solvers.hpp"
#include "nlkit/sparsity.hpp"
#include "nlkit/sparsity_pattern.hpp"
