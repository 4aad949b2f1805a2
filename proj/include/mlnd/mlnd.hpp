#pragma once

#include "mlnd/asymptotics.hpp"
#include "mlnd/error.hpp"
#include "mlnd/estimator.hpp"
#include "mlnd/harness.hpp"
#include "mlnd/random.hpp"
#include "mlnd/sim.hpp"
#include "mlnd/types.hpp"
#include "mlnd/wavelength.hpp"
