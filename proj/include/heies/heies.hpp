#pragma once

#include "dt_series.hpp"
#include "driver.hpp"
#include "equations.hpp"
#include "io.hpp"
#include "model.hpp"
#include "network.hpp"
#include "newton.hpp"
#include "pipeline.hpp"
#include "reference.hpp"
#include "sas.hpp"
#include "thermal_pde.hpp"
#include "window_matrix.hpp"
