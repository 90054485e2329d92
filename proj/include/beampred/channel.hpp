#pragma once

// Narrowband Saleh-Valenzuela channel with a half-wavelength ULA at the BS and a
// DFT beam codebook. Everything here is a pure function of its arguments.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "beampred/error.hpp"

namespace beampred {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

struct PathComponent {
    double aod_rad = 0.0;
    cplx complex_gain{1.0, 0.0};
    double path_loss = 1.0;  // linear

    double amplitude() const { return std::abs(complex_gain) * std::sqrt(1.0 / path_loss); }
};

/// Multipath state of one slot. paths[0] is the LOS path.
struct ChannelSnapshot {
    std::vector<PathComponent> paths;
    std::size_t slot_index = 0;

    const PathComponent& los() const { return paths.front(); }
};

struct Codebook {
    std::size_t num_antennas = 64;
    std::size_t num_beams = 64;
    double antenna_spacing_over_wavelength = 0.5;
};

inline bool aod_in_sector(double aod_rad) {
    return std::isfinite(aod_rad) && std::abs(aod_rad) < std::numbers::pi / 2.0;
}

inline void validate(const Codebook& cb) {
    if (cb.num_antennas < 1 || cb.num_beams < 1) throw ConfigError("codebook needs at least one antenna and one beam");
    if (!(cb.antenna_spacing_over_wavelength > 0.0)) throw ConfigError("antenna spacing must be positive");
}

inline void validate(const ChannelSnapshot& snap) {
    if (snap.paths.empty()) throw DomainError("snapshot has no paths");
    const double los_amp = snap.paths.front().amplitude();
    for (const auto& p : snap.paths) {
        if (!(p.path_loss > 0.0)) throw DomainError("path loss must be positive");
        if (!aod_in_sector(p.aod_rad)) throw DomainError("path AoD outside (-pi/2, pi/2)");
        if (p.amplitude() > los_amp) throw DomainError("LOS path is not dominant");
    }
}

/// ULA response: element m is exp(j 2 pi m (d/lambda) sin(aod)).
inline CVector steering_vector(double aod_rad, std::size_t m_antennas, double spacing_over_wavelength = 0.5) {
    if (m_antennas < 1) throw DomainError("steering_vector: need at least one antenna");
    if (!aod_in_sector(aod_rad)) throw DomainError("steering_vector: AoD " + std::to_string(aod_rad) + " outside (-pi/2, pi/2)");
    CVector a(m_antennas);
    const double phase_step = 2.0 * std::numbers::pi * spacing_over_wavelength * std::sin(aod_rad);
    a[0] = cplx(1.0, 0.0);
    for (std::size_t m = 1; m < m_antennas; ++m) a[m] = std::polar(1.0, phase_step * static_cast<double>(m));
    return a;
}

/// DFT beam q: element m is exp(j 2 pi m q / Q) / sqrt(M).
inline CVector codebook_beam(std::size_t q, const Codebook& cb) {
    if (q >= cb.num_beams) throw IndexError("codebook_beam: beam " + std::to_string(q) + " not in [0, " + std::to_string(cb.num_beams) + ")");
    CVector f(cb.num_antennas);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cb.num_antennas));
    for (std::size_t m = 0; m < cb.num_antennas; ++m) {
        // m*q is reduced mod Q first; the phase is periodic and this keeps it small
        const std::size_t turns = (m * q) % cb.num_beams;
        f[m] = std::polar(scale, 2.0 * std::numbers::pi * static_cast<double>(turns) / static_cast<double>(cb.num_beams));
    }
    return f;
}

/// h = sum_l sqrt(1/rho_l) alpha_l conj(a(phi_l)).
inline CVector channel_vector(const ChannelSnapshot& snap, std::size_t m_antennas, double spacing_over_wavelength = 0.5) {
    CVector h(m_antennas, cplx(0.0, 0.0));
    for (const auto& p : snap.paths) {
        const CVector a = steering_vector(p.aod_rad, m_antennas, spacing_over_wavelength);
        const cplx coeff = std::sqrt(1.0 / p.path_loss) * p.complex_gain;
        for (std::size_t m = 0; m < m_antennas; ++m) h[m] += coeff * std::conj(a[m]);
    }
    return h;
}

/// |h^T f|^2 with the unconjugated transpose.
inline double beam_gain(std::span<const cplx> h, std::span<const cplx> f) {
    if (h.size() != f.size()) throw ShapeError("beam_gain: channel length " + std::to_string(h.size()) + " != beam length " + std::to_string(f.size()));
    cplx acc(0.0, 0.0);
    for (std::size_t m = 0; m < h.size(); ++m) acc += h[m] * f[m];
    return std::norm(acc);
}

/// Gains of every codebook beam for one channel.
inline std::vector<double> beam_gains(std::span<const cplx> h, const Codebook& cb) {
    if (h.size() != cb.num_antennas) throw ShapeError("beam scan: channel length " + std::to_string(h.size()) + " != M=" + std::to_string(cb.num_antennas));
    std::vector<double> g(cb.num_beams);
    for (std::size_t q = 0; q < cb.num_beams; ++q) g[q] = beam_gain(h, codebook_beam(q, cb));
    return g;
}

/// Lowest index attaining the maximum of a gain scan.
inline std::size_t argmax_lowest(std::span<const double> gains) {
    std::size_t best = 0;
    for (std::size_t q = 1; q < gains.size(); ++q)
        if (gains[q] > gains[best]) best = q;
    return best;
}

inline std::size_t optimal_beam(std::span<const cplx> h, const Codebook& cb) {
    const auto g = beam_gains(h, cb);
    return argmax_lowest(g);
}

/// Gain of the predicted beam relative to the best beam; 1 for an all-zero channel.
inline double normalized_gain(std::span<const cplx> h, std::size_t predicted_q, const Codebook& cb) {
    if (predicted_q >= cb.num_beams) throw IndexError("normalized_gain: beam " + std::to_string(predicted_q) + " not in [0, " + std::to_string(cb.num_beams) + ")");
    const auto g = beam_gains(h, cb);
    const double best = g[argmax_lowest(g)];
    if (best == 0.0) return 1.0;
    return std::min(1.0, g[predicted_q] / best);
}

}  // namespace beampred
