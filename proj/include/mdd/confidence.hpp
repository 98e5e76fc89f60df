// Candidate-subset selection, subset softmax, and confidence scoring.
// score_window is the hot kernel: a serial reference plus an OpenMP
// row-parallel variant that is bit-identical by construction.
#pragma once

#include "mdd/core.hpp"

namespace mdd {

// Confidence record for one masked position.
struct PositionConfidence {
    int position = 0;
    TokenId predicted = 0;  // argmax token (global argmax; subsets preserve it)
    double score = 0.0;     // confidence under the active method, in [0,1]
    double top1 = 0.0;      // highest candidate probability
    double top2 = 0.0;      // second-highest candidate probability (0 if singleton)
};

// The k largest-logit token ids, ties broken toward smaller ids; returned
// sorted ascending by id. Throws RangeError unless 1 <= k <= vocab.
// Selection work is performed for every k, including k == vocab, so measured
// cost reflects what a decode pass actually pays.
std::vector<TokenId> top_k_candidates(const double* row, int vocab, int k);

// Probabilities over `candidates` only (max-shifted, normalized to 1).
std::vector<double> subset_softmax(const double* row, const std::vector<TokenId>& candidates);

// Index into probs of the max probability (ties toward the earlier, i.e.
// smaller-id, candidate) and that probability.
std::pair<int, double> softmax_confidence(const std::vector<double>& probs);

// 1 - H(p)/ln(k): 0 for uniform, 1 for one-hot; singleton sets score 1.0.
double entropy_confidence(const std::vector<double>& probs);

// Scores every row of m: top-k selection, subset softmax, confidence under
// `method`, plus the top-2 probabilities. threads <= 1 runs the serial
// reference; more threads parallelize over rows with identical per-row
// arithmetic, so results are bit-identical either way.
std::vector<PositionConfidence> score_window(const LogitsMatrix& m, int k,
                                             ConfidenceMethod method, int threads);

}  // namespace mdd
