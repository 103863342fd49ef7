// Convenience header pulling in the whole library.
#pragma once

#include "dtvp/core.hpp"
#include "dtvp/parallel.hpp"
#include "dtvp/optimize.hpp"
#include "dtvp/operators.hpp"
#include "dtvp/bggd.hpp"
#include "dtvp/prox.hpp"
#include "dtvp/solver.hpp"
#include "dtvp/metrics.hpp"
#include "dtvp/synth.hpp"
#include "dtvp/io.hpp"
#include "dtvp/pipeline.hpp"
