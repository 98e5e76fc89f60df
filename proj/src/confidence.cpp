// Subset confidence kernel implementation.
#include "mdd/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdd {

std::vector<TokenId> top_k_candidates(const double* row, int vocab, int k) {
    if (k < 1 || k > vocab)
        throw RangeError("candidate count " + std::to_string(k) + " outside [1, " +
                         std::to_string(vocab) + "]");
    std::vector<TokenId> idx(static_cast<size_t>(vocab));
    std::iota(idx.begin(), idx.end(), 0);
    const auto by_logit_then_id = [row](TokenId a, TokenId b) {
        if (row[a] != row[b]) return row[a] > row[b];
        return a < b;
    };
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), by_logit_then_id);
    idx.resize(static_cast<size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<double> subset_softmax(const double* row, const std::vector<TokenId>& candidates) {
    double m = row[candidates.front()];
    for (TokenId id : candidates) m = std::max(m, row[id]);
    std::vector<double> probs(candidates.size());
    double sum = 0.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        probs[i] = std::exp(row[candidates[i]] - m);
        sum += probs[i];
    }
    const double inv = 1.0 / sum;
    for (double& p : probs) p *= inv;
    return probs;
}

std::pair<int, double> softmax_confidence(const std::vector<double>& probs) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(probs.size()); ++i)
        if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(best)]) best = i;
    return {best, probs[static_cast<size_t>(best)]};
}

double entropy_confidence(const std::vector<double>& probs) {
    const size_t k = probs.size();
    if (k <= 1) return 1.0;  // degenerate candidate set carries full certainty
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return 1.0 - h / std::log(static_cast<double>(k));
}

namespace {

PositionConfidence score_row(const LogitsMatrix& m, int r, int k, ConfidenceMethod method) {
    const double* row = m.row(r);
    const std::vector<TokenId> cand = top_k_candidates(row, m.vocab, k);
    const std::vector<double> probs = subset_softmax(row, cand);
    const auto [best, top1] = softmax_confidence(probs);
    double top2 = 0.0;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i)
        if (i != best && probs[static_cast<size_t>(i)] > top2) top2 = probs[static_cast<size_t>(i)];
    PositionConfidence pc;
    pc.position = m.positions[static_cast<size_t>(r)];
    pc.predicted = cand[static_cast<size_t>(best)];
    pc.top1 = top1;
    pc.top2 = top2;
    pc.score = method == ConfidenceMethod::softmax ? top1 : entropy_confidence(probs);
    return pc;
}

}  // namespace

std::vector<PositionConfidence> score_window(const LogitsMatrix& m, int k,
                                             ConfidenceMethod method, int threads) {
    const int n = m.rows();
    std::vector<PositionConfidence> out(static_cast<size_t>(n));
#ifdef _OPENMP
    if (threads > 1 && n > 1) {
        #pragma omp parallel for schedule(static) num_threads(threads)
        for (int r = 0; r < n; ++r) out[static_cast<size_t>(r)] = score_row(m, r, k, method);
        return out;
    }
#endif
    for (int r = 0; r < n; ++r) out[static_cast<size_t>(r)] = score_row(m, r, k, method);
    return out;
}

}  // namespace mdd
