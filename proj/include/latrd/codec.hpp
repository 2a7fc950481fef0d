#pragma once

// End-to-end simulation of the separated architecture: lattice quantizer
// followed by a lossless coder. Variable-length runs use a Huffman code over
// the cells observed in a training pass; fixed-length runs keep the M most
// probable cells. Training and evaluation use disjoint seeded substreams so
// both the entropy estimate and the excess probability are unbiased.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latrd/distortion.hpp"
#include "latrd/lattice.hpp"
#include "latrd/math.hpp"
#include "latrd/rng.hpp"
#include "latrd/sources.hpp"

namespace latrd {

// Huffman code lengths for the given weights. One symbol gets the empty
// codeword (a decoder that knows the alphabet needs no bits).
inline std::vector<int> huffman_lengths(const std::vector<double>& weights) {
    size_t k = weights.size();
    if (k == 0) return {};
    if (k == 1) return {0};
    struct Node {
        double w;
        size_t tie;
        int left, right;  // -1 for leaves
        int symbol;
    };
    std::vector<Node> nodes;
    nodes.reserve(2 * k);
    auto cmp = [&nodes](int a, int b) {
        if (nodes[a].w != nodes[b].w) return nodes[a].w > nodes[b].w;
        return nodes[a].tie > nodes[b].tie;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> pq(cmp);
    for (size_t i = 0; i < k; ++i) {
        nodes.push_back({weights[i], i, -1, -1, static_cast<int>(i)});
        pq.push(static_cast<int>(i));
    }
    size_t tie = k;
    while (pq.size() > 1) {
        int a = pq.top(); pq.pop();
        int b = pq.top(); pq.pop();
        nodes.push_back({nodes[a].w + nodes[b].w, tie++, a, b, -1});
        pq.push(static_cast<int>(nodes.size() - 1));
    }
    std::vector<int> lengths(k, 0);
    // iterative depth-first walk from the root
    std::vector<std::pair<int, int>> stack{{pq.top(), 0}};
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        const Node& nd = nodes[id];
        if (nd.left < 0) {
            lengths[nd.symbol] = depth;
        } else {
            stack.push_back({nd.left, depth + 1});
            stack.push_back({nd.right, depth + 1});
        }
    }
    return lengths;
}

struct CodecStats {
    double avg_length_bits_per_letter = 0.0;
    double entropy_estimate_bits_per_letter = 0.0;  // Miller-Madow, eval pass
    double entropy_se_bits_per_letter = 0.0;
    double eps_hat = 0.0;
    double wilson_lo = 0.0, wilson_hi = 0.0;
    double spectrum_eps_bound = 0.0;  // P[-log p_hat(cell) > log M] from the training pmf
    std::uint64_t M_used = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::size_t distinct_cells = 0;
    std::size_t escape_count = 0;
    std::size_t distortion_violations = 0;
    std::string flags;
};

struct CellRecord {
    std::uint64_t index_hash = 0;
    std::uint64_t count = 0;
    int codeword_length = 0;  // -1 marks the escape path
};

namespace detail {

struct TrainedCells {
    // canonical order: descending count, then ascending index vector
    std::vector<std::pair<std::vector<long long>, std::uint64_t>> cells;
    CellCounts lookup;  // index -> position in cells
};

inline TrainedCells train_pass(const Lattice& lat, const ContinuousSource& src,
                               const DistortionMeasure& dist, double d, std::size_t samples,
                               std::uint64_t seed, std::size_t& violations) {
    Rng rng = Rng::stream(seed, 1);
    CellCounts counts;
    std::vector<double> x(src.dimension());
    for (std::size_t i = 0; i < samples; ++i) {
        src.sample(rng, x);
        std::vector<long long> idx = lat.nearest_index(x);
        std::vector<double> pt(x.size());
        lat.index_to_point(idx, pt);
        if (evaluate(dist, x, pt) > d) ++violations;
        ++counts[std::move(idx)];
    }
    TrainedCells out;
    out.cells.assign(counts.begin(), counts.end());
    std::sort(out.cells.begin(), out.cells.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    out.lookup.reserve(out.cells.size());
    for (std::size_t i = 0; i < out.cells.size(); ++i) out.lookup[out.cells[i].first] = i;
    return out;
}

inline void entropy_from_counts(const CellCounts& counts, std::size_t samples, double& mm_bits,
                                double& se_bits) {
    double n = static_cast<double>(samples);
    double h = 0.0, m2 = 0.0;
    for (const auto& [idx, c] : counts) {
        double p = static_cast<double>(c) / n;
        double info = -std::log(p);
        h += p * info;
        m2 += p * info * info;
    }
    double mm = h + (static_cast<double>(counts.size()) - 1.0) / (2.0 * n);
    mm_bits = nats_to_bits(mm);
    se_bits = nats_to_bits(std::sqrt(std::max(0.0, m2 - h * h) / n));
}

}  // namespace detail

// Variable-length codec: Huffman over the training cells. An escape symbol
// (codeword plus a raw 64-bit cell index) is added only when the training
// pass indicates unseen mass (Good-Turing: singleton fraction > 0); with it
// absent, an unencodable evaluation sample is counted and flagged.
inline CodecStats simulate_variable_length(const ContinuousSource& src, const Lattice& lat,
                                           double d, std::size_t samples, std::uint64_t seed,
                                           std::vector<CellRecord>* per_cell = nullptr) {
    DistortionMeasure dist = DistortionMeasure::mse(src.dimension());
    CodecStats st;
    st.samples = samples;
    st.seed = seed;

    detail::TrainedCells trained =
        detail::train_pass(lat, src, dist, d, samples, seed, st.distortion_violations);
    std::size_t k = trained.cells.size();
    st.distinct_cells = k;

    std::uint64_t singletons = 0;
    for (const auto& [idx, c] : trained.cells)
        if (c == 1) ++singletons;
    bool with_escape = singletons > 0;

    std::vector<double> weights;
    weights.reserve(k + 1);
    for (const auto& [idx, c] : trained.cells) weights.push_back(static_cast<double>(c));
    if (with_escape) weights.push_back(std::max(1.0, static_cast<double>(singletons)));
    std::vector<int> lengths = huffman_lengths(weights);
    int escape_len = with_escape ? lengths.back() + 64 : 64;

    // evaluation pass on an independent substream
    Rng rng = Rng::stream(seed, 2);
    detail::CellCounts eval_counts;
    std::vector<double> x(src.dimension());
    std::uint64_t total_bits = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        src.sample(rng, x);
        std::vector<long long> idx = lat.nearest_index(x);
        std::vector<double> pt(x.size());
        lat.index_to_point(idx, pt);
        if (evaluate(dist, x, pt) > d) ++st.distortion_violations;
        auto it = trained.lookup.find(idx);
        if (it == trained.lookup.end()) {
            ++st.escape_count;
            total_bits += escape_len;
            if (!with_escape) append_flag(st.flags, "escape_without_codeword");
        } else {
            total_bits += lengths[it->second];
        }
        ++eval_counts[std::move(idx)];
    }
    st.avg_length_bits_per_letter =
        static_cast<double>(total_bits) / (static_cast<double>(samples) * src.dimension());
    detail::entropy_from_counts(eval_counts, samples, st.entropy_estimate_bits_per_letter,
                                st.entropy_se_bits_per_letter);
    st.entropy_estimate_bits_per_letter /= src.dimension();
    st.entropy_se_bits_per_letter /= src.dimension();
    if (st.escape_count > samples / 100) append_flag(st.flags, "escape_rate_high");

    if (per_cell) {
        per_cell->clear();
        per_cell->reserve(k);
        detail::IndexHash hasher;
        for (std::size_t i = 0; i < k; ++i)
            per_cell->push_back({static_cast<std::uint64_t>(hasher(trained.cells[i].first)),
                                 trained.cells[i].second, lengths[i]});
        if (with_escape) per_cell->push_back({0, 0, escape_len});
    }
    return st;
}

// Fixed-length codec: keep the M training cells of largest estimated mass;
// evaluation samples landing elsewhere are excess-distortion events.
inline CodecStats simulate_fixed_length(const ContinuousSource& src, const Lattice& lat,
                                        double d, std::uint64_t M, std::size_t samples,
                                        std::uint64_t seed) {
    if (M < 1) throw std::invalid_argument("simulate_fixed_length: M must be >= 1");
    DistortionMeasure dist = DistortionMeasure::mse(src.dimension());
    CodecStats st;
    st.samples = samples;
    st.seed = seed;
    st.M_used = M;

    detail::TrainedCells trained =
        detail::train_pass(lat, src, dist, d, samples, seed, st.distortion_violations);
    std::size_t k = trained.cells.size();
    st.distinct_cells = k;
    if (M > k) append_flag(st.flags, "M_exceeds_observed_cells");
    std::size_t keep = std::min<std::size_t>(M, k);

    // spectrum-based excess bound from the training pmf:
    // P[ -log p_hat(cell) > log M ] = mass of cells with p_hat < 1/M
    double n_train = static_cast<double>(samples);
    double bound = 0.0;
    for (const auto& [idx, c] : trained.cells) {
        double p = static_cast<double>(c) / n_train;
        if (-std::log(p) > std::log(static_cast<double>(M))) bound += p;
    }
    st.spectrum_eps_bound = bound;

    Rng rng = Rng::stream(seed, 2);
    std::vector<double> x(src.dimension());
    std::uint64_t misses = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        src.sample(rng, x);
        std::vector<long long> idx = lat.nearest_index(x);
        std::vector<double> pt(x.size());
        lat.index_to_point(idx, pt);
        if (evaluate(dist, x, pt) > d) ++st.distortion_violations;
        auto it = trained.lookup.find(idx);
        if (it == trained.lookup.end() || it->second >= keep) ++misses;
    }
    st.eps_hat = static_cast<double>(misses) / samples;
    WilsonInterval wi = wilson_interval(misses, samples);
    st.wilson_lo = wi.lo;
    st.wilson_hi = wi.hi;
    return st;
}

}  // namespace latrd
