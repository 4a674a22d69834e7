#include "sdot/points.hpp"

namespace sdot {

bool PointConfiguration::on_diagonal() const {
    const int n = size();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (pts[i] == pts[j]) return true;
    return false;
}

int TieWeights::active_count() const {
    int c = 0;
    for (double l : lambda)
        if (l > 0.0) ++c;
    return c;
}

int TieWeights::first_active() const {
    for (std::size_t i = 0; i < lambda.size(); ++i)
        if (lambda[i] > 0.0) return static_cast<int>(i);
    return -1;
}

TieWeights tie_weights(const PointConfiguration& y) {
    const int n = y.size();
    TieWeights t;
    t.lambda.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        bool seen_before = false;
        for (int k = 0; k < i; ++k) {
            if (y.pts[k] == y.pts[i]) {
                seen_before = true;
                break;
            }
        }
        if (seen_before) continue;
        int group = 0;
        for (int j = i; j < n; ++j)
            if (y.pts[j] == y.pts[i]) ++group;
        t.lambda[static_cast<std::size_t>(i)] =
            static_cast<double>(group) / static_cast<double>(n);
    }
    return t;
}

}  // namespace sdot
