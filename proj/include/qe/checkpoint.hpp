#pragma once

#include <string>

#include "qe/ensemble.hpp"
#include "qe/predictor.hpp"

namespace qe {

// Plain-text model files. Doubles are printed with 17 significant digits so
// a save/load round trip is bit-exact and repeated runs diff cleanly.
//
// Hashed-bag predictors store only the embedding columns that training
// changed: the rest of the table is reconstructed from the recorded init
// seed and the accumulated weight-decay scale of untouched columns.

void save_predictor(const PredictorModel& model, const std::string& path);
PredictorModel load_predictor(const std::string& path);

void save_ensemble(const EnsembleModel& model, const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

// "%.17g" — shortest text that round-trips a double exactly.
std::string format_exact(double v);

}  // namespace qe
