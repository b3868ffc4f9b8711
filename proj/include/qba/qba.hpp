#pragma once

// Everything: data model, GLMs, bias engine, simulation and reporting.

#include "qba/bias_parameters.hpp"
#include "qba/config.hpp"
#include "qba/csv.hpp"
#include "qba/dataset.hpp"
#include "qba/design.hpp"
#include "qba/engine.hpp"
#include "qba/error.hpp"
#include "qba/glm.hpp"
#include "qba/metrics.hpp"
#include "qba/parallel.hpp"
#include "qba/priors.hpp"
#include "qba/report.hpp"
#include "qba/rng.hpp"
#include "qba/schema.hpp"
#include "qba/simgen.hpp"
#include "qba/simulation.hpp"
