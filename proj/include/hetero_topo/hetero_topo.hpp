#pragma once

#include "hetero_topo/assignment.hpp"
#include "hetero_topo/dsgd.hpp"
#include "hetero_topo/errors.hpp"
#include "hetero_topo/heterogeneity.hpp"
#include "hetero_topo/io.hpp"
#include "hetero_topo/jacobi.hpp"
#include "hetero_topo/matrix.hpp"
#include "hetero_topo/mixing.hpp"
#include "hetero_topo/parallel.hpp"
#include "hetero_topo/pipeline.hpp"
#include "hetero_topo/problems.hpp"
#include "hetero_topo/proportions.hpp"
#include "hetero_topo/quadrature.hpp"
#include "hetero_topo/rng.hpp"
#include "hetero_topo/topo_opt.hpp"
