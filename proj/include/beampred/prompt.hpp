#pragma once

// Prompt-as-prefix text: domain knowledge, instruction, and input statistics
// (trend, autocorrelation lags, min/max/median), plus the hashing tokenizer that
// maps it onto the frozen vocabulary.

#include <fftw3.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "beampred/config.hpp"
#include "beampred/error.hpp"

namespace beampred {

enum class Trend { upward, downward };

inline const char* to_string(Trend t) { return t == Trend::upward ? "upward" : "downward"; }

/// Sum of successive differences; it telescopes to last - first.
inline Trend trend_stat(std::span<const double> series) {
    if (series.size() < 2) throw DomainError("trend_stat: series needs at least 2 values");
    double total = 0.0;
    for (std::size_t t = 0; t + 1 < series.size(); ++t) total += series[t + 1] - series[t];
    return total > 0.0 ? Trend::upward : Trend::downward;
}

namespace detail {

// FFTW's planner is not thread-safe.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Unnormalised autocorrelation r[k] = sum_t x[t] x[t+k] for k in [0, n), via a
/// zero-padded real FFT.
inline std::vector<double> autocorrelation_fft(std::span<const double> x) {
    const std::size_t n = x.size();
    std::size_t len = 1;
    while (len < 2 * n) len <<= 1;
    const std::size_t bins = len / 2 + 1;
    double* in = fftw_alloc_real(len);
    fftw_complex* spec = fftw_alloc_complex(bins);
    fftw_plan fwd, inv;
    {
        std::lock_guard lock(fftw_planner_mutex());
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, spec, FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec, in, FFTW_ESTIMATE);
    }
    std::fill(in, in + len, 0.0);
    std::copy(x.begin(), x.end(), in);
    fftw_execute(fwd);
    for (std::size_t b = 0; b < bins; ++b) {
        spec[b][0] = spec[b][0] * spec[b][0] + spec[b][1] * spec[b][1];
        spec[b][1] = 0.0;
    }
    fftw_execute(inv);
    std::vector<double> r(in, in + n);
    for (auto& v : r) v /= static_cast<double>(len);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }
    fftw_free(in);
    fftw_free(spec);
    return r;
}

}  // namespace detail

/// Ranking key for autocorrelation values: r[k] / r[0] quantised to 1e-9 so that
/// values equal up to round-off rank as exact ties. A series with (numerically)
/// zero variance has every key equal to zero.
inline std::vector<std::int64_t> lag_ranking_keys(std::span<const double> acf, double energy_floor) {
    std::vector<std::int64_t> keys(acf.size(), 0);
    if (acf.empty() || !(acf[0] > energy_floor)) return keys;
    for (std::size_t k = 0; k < acf.size(); ++k) keys[k] = std::llround(acf[k] / acf[0] * 1e9);
    return keys;
}

/// The k lags in [1, U-1] with the largest autocorrelation of the mean-removed
/// series, strongest first; ties go to the smaller lag.
inline std::vector<std::size_t> top_lags(std::span<const double> series, std::size_t k = 5) {
    const std::size_t u = series.size();
    if (u < 2) throw DomainError("top_lags: series needs at least 2 values");
    if (k < 1 || k > u - 1) throw DomainError("top_lags: k must lie in [1, U-1]");
    double mean = 0.0, energy = 0.0;
    for (double v : series) {
        mean += v;
        energy += v * v;
    }
    mean /= static_cast<double>(u);
    std::vector<double> centered(series.begin(), series.end());
    for (auto& v : centered) v -= mean;
    const auto acf = detail::autocorrelation_fft(centered);
    const auto keys = lag_ranking_keys(acf, 1e-24 * (1.0 + energy));
    std::vector<std::size_t> lags(u - 1);
    for (std::size_t i = 0; i < lags.size(); ++i) lags[i] = i + 1;
    std::stable_sort(lags.begin(), lags.end(), [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
    lags.resize(k);
    return lags;
}

/// Splits on whitespace, then separates digit runs from everything else. Each piece
/// hashes into [0, vocab_size).
inline std::vector<std::string> tokenize_pieces(std::string_view text) {
    std::vector<std::string> pieces;
    std::string cur;
    bool cur_digit = false;
    auto flush = [&] {
        if (!cur.empty()) pieces.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
            continue;
        }
        const bool digit = std::isdigit(c) != 0;
        if (!cur.empty() && digit != cur_digit) flush();
        cur_digit = digit;
        cur.push_back(ch);
    }
    flush();
    return pieces;
}

inline std::vector<std::size_t> tokenize(std::string_view text, std::size_t vocab_size) {
    if (vocab_size == 0) throw ConfigError("tokenize: empty vocabulary");
    std::vector<std::size_t> ids;
    for (const auto& p : tokenize_pieces(text)) ids.push_back(static_cast<std::size_t>(detail::fnv1a64(p) % vocab_size));
    return ids;
}

struct PromptSpec {
    std::size_t q_count = 64;
    std::size_t u_len = 40;
    std::size_t h_len = 10;
    std::size_t vocab_size = 4096;
    bool stats_row_is_beam = true;  // row 0 holds beam index / Q (else AoD radians)
};

struct Prompt {
    std::string text;
    std::vector<std::size_t> token_ids;
};

namespace detail {
inline std::string short_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}
}  // namespace detail

/// Builds the prefix text for one window. `stats_row` is row 0 of the model input
/// (normalised beam indices for the default layout).
inline Prompt build_prompt(std::span<const double> stats_row, const PromptSpec& spec) {
    std::vector<double> values(stats_row.begin(), stats_row.end());
    if (spec.stats_row_is_beam)
        for (auto& v : values) v = std::round(v * static_cast<double>(spec.q_count));
    for (double v : values)
        if (!std::isfinite(v)) throw NumericError("build_prompt: non-finite input");

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const Trend trend = trend_stat(values);
    const auto lags = top_lags(values, std::min<std::size_t>(5, n - 1));

    std::string text = "mmWave beam prediction with " + std::to_string(spec.q_count) + " DFT beams, one step every 16 ms. ";
    text += "Predict the next " + std::to_string(spec.h_len) + " optimal beam indices given the previous " + std::to_string(spec.u_len) + " steps. ";
    text += "Input statistics: min " + detail::short_number(sorted.front()) + " max " + detail::short_number(sorted.back()) + " median " +
            detail::short_number(median) + " trend " + to_string(trend) + " top lags";
    for (auto l : lags) text += " " + std::to_string(l);
    text += ".";
    return Prompt{text, tokenize(text, spec.vocab_size)};
}

}  // namespace beampred
