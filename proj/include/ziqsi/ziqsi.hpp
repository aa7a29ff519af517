#pragma once

#include "ziqsi/baselines.hpp"
#include "ziqsi/bspline.hpp"
#include "ziqsi/core/check_loss.hpp"
#include "ziqsi/core/parallel.hpp"
#include "ziqsi/core/quantile_lp.hpp"
#include "ziqsi/core/sphere_search.hpp"
#include "ziqsi/core/stats.hpp"
#include "ziqsi/dataset.hpp"
#include "ziqsi/effects.hpp"
#include "ziqsi/error.hpp"
#include "ziqsi/quantile_curve.hpp"
#include "ziqsi/single_index.hpp"
#include "ziqsi/sim/design.hpp"
#include "ziqsi/sim/metrics.hpp"
#include "ziqsi/sim/rng.hpp"
#include "ziqsi/sim/study.hpp"
#include "ziqsi/zero_model.hpp"
