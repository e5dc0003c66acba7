#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "survbex/models.hpp"

namespace survbex {

// ---------------------------------------------------------------------------
// Log-rank statistic
// ---------------------------------------------------------------------------

double logrank_statistic(const SurvivalDataset& left, const SurvivalDataset& right) {
    if (left.empty() || right.empty()) {
        throw std::domain_error("logrank_statistic: both groups must be nonempty");
    }
    if (left.event_count() + right.event_count() == 0) {
        throw std::domain_error("logrank_statistic: no events in either group");
    }
    struct Obs {
        double time;
        int event;
        bool is_left;
    };
    std::vector<Obs> all;
    all.reserve(left.size() + right.size());
    for (std::size_t i = 0; i < left.size(); ++i) all.push_back({left.time(i), left.event(i), true});
    for (std::size_t i = 0; i < right.size(); ++i) {
        all.push_back({right.time(i), right.event(i), false});
    }
    std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });

    double at_risk = static_cast<double>(all.size());
    double at_risk_left = static_cast<double>(left.size());
    double diff = 0.0, var = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        double deaths = 0.0, deaths_left = 0.0, gone = 0.0, gone_left = 0.0;
        while (j < all.size() && all[j].time == all[i].time) {
            deaths += all[j].event;
            if (all[j].is_left) {
                deaths_left += all[j].event;
                gone_left += 1.0;
            }
            gone += 1.0;
            ++j;
        }
        if (deaths > 0.0) {
            const double frac = at_risk_left / at_risk;
            diff += deaths_left - deaths * frac;
            if (at_risk > 1.0) var += deaths * frac * (1.0 - frac) * (at_risk - deaths) / (at_risk - 1.0);
        }
        at_risk -= gone;
        at_risk_left -= gone_left;
        i = j;
    }
    if (var <= 0.0) return 0.0;
    return diff / std::sqrt(var);
}

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

const LeafHazard& SurvivalTree::leaf_for(std::span<const double> x) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        const auto& nd = nodes[node];
        node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return leaves[static_cast<std::size_t>(nodes[node].leaf)];
}

int SurvivalTree::depth() const {
    std::vector<int> level(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (nodes[i].feature >= 0) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // squared standardized log-rank statistic
};

class TreeBuilder {
public:
    TreeBuilder(const SurvivalDataset& data, const ForestOptions& opt, int mtry, std::mt19937_64& rng)
        : data_(data), opt_(opt), mtry_(mtry), rng_(rng) {}

    SurvivalTree build(std::vector<std::size_t> sample) {
        std::sort(sample.begin(), sample.end());  // canonical order is time order
        grow(std::move(sample), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t> sample, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        Split best;
        if (depth < opt_.max_depth && static_cast<int>(sample.size()) >= opt_.min_node_size &&
            has_event(sample)) {
            best = find_split(sample);
        }
        if (best.feature < 0) {
            tree_.nodes[id].leaf = static_cast<int>(tree_.leaves.size());
            tree_.leaves.push_back(leaf_hazard(sample));
            return id;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t i : sample) {
            (data_.features(i)[static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right)
                .push_back(i);
        }
        sample.clear();
        sample.shrink_to_fit();
        tree_.nodes[id].feature = best.feature;
        tree_.nodes[id].threshold = best.threshold;
        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    bool has_event(const std::vector<std::size_t>& sample) const {
        return std::any_of(sample.begin(), sample.end(), [&](std::size_t i) { return data_.event(i) == 1; });
    }

    // Sample is sorted by time. Evaluates every cut between distinct feature values.
    Split find_split(const std::vector<std::size_t>& sample) {
        const std::size_t m = sample.size();
        // Local time ranks.
        std::vector<std::size_t> rank(m);
        std::vector<double> at_risk, deaths;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == 0 || data_.time(sample[i]) != data_.time(sample[i - 1])) {
                at_risk.push_back(0.0);
                deaths.push_back(0.0);
            }
            rank[i] = at_risk.size() - 1;
            deaths.back() += data_.event(sample[i]);
        }
        const std::size_t nt = at_risk.size();
        for (std::size_t i = 0; i < m; ++i) at_risk[rank[i]] += 1.0;
        for (std::size_t r = nt - 1; r-- > 0;) at_risk[r] += at_risk[r + 1];
        std::vector<std::size_t> event_ranks;
        for (std::size_t r = 0; r < nt; ++r) {
            if (deaths[r] > 0.0) event_ranks.push_back(r);
        }

        std::vector<int> features(data_.dim());
        std::iota(features.begin(), features.end(), 0);
        const int k = std::min<int>(mtry_, static_cast<int>(features.size()));
        for (int f = 0; f < k; ++f) {
            std::uniform_int_distribution<int> pick(f, static_cast<int>(features.size()) - 1);
            std::swap(features[f], features[pick(rng_)]);
        }

        Split best;
        std::vector<std::size_t> order(m);
        std::vector<double> risk_left(nt), deaths_left(nt);
        for (int fi = 0; fi < k; ++fi) {
            const auto feat = static_cast<std::size_t>(features[fi]);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return data_.features(sample[a])[feat] < data_.features(sample[b])[feat];
            });
            std::fill(risk_left.begin(), risk_left.end(), 0.0);
            std::fill(deaths_left.begin(), deaths_left.end(), 0.0);
            for (std::size_t c = 0; c + 1 < m; ++c) {
                const std::size_t pos = order[c];
                for (std::size_t r = 0; r <= rank[pos]; ++r) risk_left[r] += 1.0;
                deaths_left[rank[pos]] += data_.event(sample[pos]);

                const double here = data_.features(sample[pos])[feat];
                const double next = data_.features(sample[order[c + 1]])[feat];
                if (here == next) continue;
                const std::size_t n_left = c + 1;
                if (static_cast<int>(n_left) < opt_.min_leaf_size ||
                    static_cast<int>(m - n_left) < opt_.min_leaf_size) {
                    continue;
                }
                double diff = 0.0, var = 0.0;
                for (std::size_t r : event_ranks) {
                    const double y = at_risk[r];
                    const double frac = risk_left[r] / y;
                    diff += deaths_left[r] - deaths[r] * frac;
                    if (y > 1.0) var += deaths[r] * frac * (1.0 - frac) * (y - deaths[r]) / (y - 1.0);
                }
                if (var <= 0.0) continue;
                const double score = diff * diff / var;
                if (score > best.score) {
                    best.score = score;
                    best.feature = features[fi];
                    best.threshold = 0.5 * (here + next);
                }
            }
        }
        return best;
    }

    LeafHazard leaf_hazard(const std::vector<std::size_t>& sample) const {
        LeafHazard inc;
        double at_risk = static_cast<double>(sample.size());
        for (std::size_t i = 0; i < sample.size();) {
            std::size_t j = i;
            double deaths = 0.0;
            while (j < sample.size() && data_.time(sample[j]) == data_.time(sample[i])) {
                deaths += data_.event(sample[j]);
                ++j;
            }
            if (deaths > 0.0) {
                inc.emplace_back(static_cast<std::uint32_t>(data_.grid_index(sample[i])), deaths / at_risk);
            }
            at_risk -= static_cast<double>(j - i);
            i = j;
        }
        return inc;
    }

    const SurvivalDataset& data_;
    const ForestOptions& opt_;
    int mtry_;
    std::mt19937_64& rng_;
    SurvivalTree tree_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Forest
// ---------------------------------------------------------------------------

SurvivalForest::SurvivalForest(TimeGrid grid, std::size_t dim, std::vector<SurvivalTree> trees)
    : grid_(std::move(grid)), dim_(dim), trees_(std::move(trees)) {
    if (trees_.empty()) throw std::domain_error("SurvivalForest: no trees");
    for (const auto& t : trees_) {
        for (const auto& leaf : t.leaves) {
            for (const auto& [k, h] : leaf) {
                if (k >= grid_.size() || h < 0.0) {
                    throw std::domain_error("SurvivalForest: leaf hazard outside the grid or negative");
                }
            }
        }
    }
}

StepFunction SurvivalForest::predict_chf(std::span<const double> x) const {
    if (x.size() != dim_) throw std::domain_error("SurvivalForest: dimension mismatch");
    std::vector<double> h(grid_.size(), 0.0);
    for (const auto& tree : trees_) {
        for (const auto& [k, inc] : tree.leaf_for(x)) h[k] += inc;
    }
    const double scale = 1.0 / static_cast<double>(trees_.size());
    double acc = 0.0;
    for (double& v : h) {
        acc += v;
        v = acc * scale;
    }
    return StepFunction(grid_, std::move(h));
}

StepFunction SurvivalForest::predict_sf(std::span<const double> x) const {
    return chf_to_sf(predict_chf(x));
}

StepFunction forest_predict_sf(const SurvivalForest& model, std::span<const double> x) {
    return model.predict_sf(x);
}

SurvivalForest forest_fit(const SurvivalDataset& dataset, const ForestOptions& options) {
    if (dataset.empty()) throw std::domain_error("forest_fit: empty dataset");
    if (options.n_trees < 1) throw std::domain_error("forest_fit: n_trees must be at least 1");
    if (options.max_depth < 0) throw std::domain_error("forest_fit: max_depth must be nonnegative");
    const int mtry = options.mtry > 0
                         ? options.mtry
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dataset.dim()))));

    const auto n_trees = static_cast<std::size_t>(options.n_trees);
    std::vector<SurvivalTree> trees(n_trees);
    auto build_one = [&](std::size_t t) {
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                          static_cast<std::uint32_t>(options.seed >> 32),
                          static_cast<std::uint32_t>(t), 0x5eedu};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::size_t> draw(0, dataset.size() - 1);
        std::vector<std::size_t> sample(dataset.size());
        if (options.bootstrap) {
            for (auto& s : sample) s = draw(rng);
        } else {
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        }
        trees[t] = TreeBuilder(dataset, options, mtry, rng).build(std::move(sample));
    };

    unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_trees)));
    if (workers == 1) {
        for (std::size_t t = 0; t < n_trees; ++t) build_one(t);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < n_trees; t += workers) build_one(t);
            });
        }
    }
    return SurvivalForest(dataset.grid(), dataset.dim(), std::move(trees));
}

}  // namespace survbex
