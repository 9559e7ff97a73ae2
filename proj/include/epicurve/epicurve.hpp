#pragma once

// Umbrella header for the library (everything except the network layer in
// fetch.hpp, which pulls in cpp-httplib).

#include "epicurve/calculus.hpp"
#include "epicurve/domain.hpp"
#include "epicurve/error.hpp"
#include "epicurve/ingestion.hpp"
#include "epicurve/logistic_model.hpp"
#include "epicurve/optimize.hpp"
#include "epicurve/pipeline.hpp"
#include "epicurve/poisson_glm.hpp"
#include "epicurve/reporting.hpp"
#include "epicurve/selection.hpp"
