#pragma once

// Umbrella header for the etg library: CSV ingestion, preprocessing,
// extremely-randomized-tree ensembles, evaluation metrics and the
// train/evaluate/predict pipelines.

#include "etg/csv.hpp"
#include "etg/ensemble.hpp"
#include "etg/error.hpp"
#include "etg/metrics.hpp"
#include "etg/model_io.hpp"
#include "etg/parallel.hpp"
#include "etg/pipeline.hpp"
#include "etg/preprocess.hpp"
#include "etg/report.hpp"
#include "etg/rng.hpp"
#include "etg/table.hpp"
#include "etg/tree.hpp"
