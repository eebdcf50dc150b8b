#pragma once

#include "qhydro/calendar.hpp"
#include "qhydro/calibration.hpp"
#include "qhydro/config.hpp"
#include "qhydro/errors.hpp"
#include "qhydro/experiment.hpp"
#include "qhydro/gr_models.hpp"
#include "qhydro/pet_oudin.hpp"
#include "qhydro/plot_data.hpp"
#include "qhydro/scoring.hpp"
#include "qhydro/summary.hpp"
#include "qhydro/synthetic.hpp"
#include "qhydro/timeseries_io.hpp"
