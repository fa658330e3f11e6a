#pragma once

#include "dbarrier/levy_model.hpp"
#include "dbarrier/philox.hpp"
#include "dbarrier/path_engine.hpp"
#include "dbarrier/reflection.hpp"
#include "dbarrier/strategies.hpp"
#include "dbarrier/estimate.hpp"
#include "dbarrier/valuation.hpp"
#include "dbarrier/barrier.hpp"
#include "dbarrier/quadrature.hpp"
#include "dbarrier/scale_oracle.hpp"
#include "dbarrier/generator.hpp"
