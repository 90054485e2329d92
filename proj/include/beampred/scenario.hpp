#pragma once

// UT trajectories, beam-oracle traces, windowing into training samples, and the
// trace CSV / BPDS dataset / BPSN snapshot file formats.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "beampred/binary_io.hpp"
#include "beampred/channel.hpp"
#include "beampred/config.hpp"
#include "beampred/error.hpp"
#include "beampred/parallel.hpp"

namespace beampred {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct TrajectoryConfig {
    std::size_t num_slots = 100;
    double slot_period_s = 0.016;
    double ut_speed_mps = 10.0;
    Point2 bs_position_m{0.0, 0.0};
    Point2 ut_start_m{20.0, 25.0};
    double ut_heading_rad = 0.0;
    double carrier_freq_ghz = 28.0;
    std::size_t num_antennas = 64;
    std::size_t num_beams = 64;
    std::size_t num_nlos_paths = 2;
    double nlos_relative_loss_db = 10.0;
    double aod_jitter_std_rad = 0.0;
    std::uint64_t seed = 1;

    Codebook codebook() const { return Codebook{num_antennas, num_beams, 0.5}; }
};

struct TraceRecord {
    std::size_t slot = 0;
    std::size_t opt_beam = 0;
    double aod_rad = 0.0;

    bool operator==(const TraceRecord&) const = default;
};

/// One training example: x is C x U row-major (row 0 beam index / Q, row 1 AoD),
/// y holds the H future beam indices / Q.
struct WindowedSample {
    std::size_t c = 2;
    std::size_t u = 0;
    std::vector<float> x;
    std::vector<float> y;
    std::uint32_t q_count = 0;

    float at(std::size_t row, std::size_t t) const { return x[row * u + t]; }
    bool operator==(const WindowedSample&) const = default;
};

/// Snapshots plus the oracle trace derived from them.
struct Trajectory {
    std::vector<ChannelSnapshot> snapshots;
    std::vector<TraceRecord> trace;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Box-Muller on our own uniforms so draws do not depend on the standard library's
// distribution implementation.
inline double gaussian(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline Point2 ut_position(const TrajectoryConfig& cfg, std::size_t n) {
    const double dist = cfg.ut_speed_mps * cfg.slot_period_s * static_cast<double>(n);
    return {cfg.ut_start_m.x + dist * std::cos(cfg.ut_heading_rad), cfg.ut_start_m.y + dist * std::sin(cfg.ut_heading_rad)};
}

/// Array axis along x, broadside along +y.
inline double los_aod(const Point2& bs, const Point2& ut) { return std::atan2(ut.x - bs.x, ut.y - bs.y); }

inline std::string fixed_decimal(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    if (ec != std::errc()) throw IoError("cannot format number");
    return std::string(buf, ptr);
}
}  // namespace detail

inline void validate(const TrajectoryConfig& cfg) {
    if (cfg.num_slots < 1) throw ConfigError("trajectory needs at least one slot");
    if (!(cfg.slot_period_s > 0.0)) throw ConfigError("slot_period_s must be positive");
    if (!(cfg.ut_speed_mps >= 0.0)) throw ConfigError("ut_speed_mps must be nonnegative");
    if (cfg.num_antennas < 1 || cfg.num_beams < 1) throw ConfigError("num_antennas and num_beams must be >= 1");
    if (!(cfg.nlos_relative_loss_db > 0.0)) throw ConfigError("nlos_relative_loss_db must be positive");
    if (!(cfg.aod_jitter_std_rad >= 0.0)) throw ConfigError("aod_jitter_std_rad must be nonnegative");
}

/// Straight-line constant-velocity UT, LOS plus seeded static NLOS paths.
inline std::vector<ChannelSnapshot> generate_trajectory(const TrajectoryConfig& cfg) {
    validate(cfg);
    std::mt19937_64 los_rng(detail::splitmix64(cfg.seed));
    std::mt19937_64 jitter_rng(detail::splitmix64(cfg.seed ^ 0x6a09e667f3bcc909ULL));
    // NLOS phases are salted with the carrier so a frequency change re-draws the scatter.
    const std::uint64_t fc_salt = detail::fnv1a64("fc=" + detail::fixed_decimal(cfg.carrier_freq_ghz));
    std::mt19937_64 nlos_rng(detail::splitmix64(cfg.seed ^ fc_salt));

    const cplx los_gain = std::polar(1.0, detail::uniform(los_rng, 0.0, 2.0 * std::numbers::pi));
    struct Scatter {
        double aod;
        cplx gain;
        double extra_loss_db;
    };
    std::vector<Scatter> scatter(cfg.num_nlos_paths);
    for (auto& s : scatter) {
        s.aod = detail::uniform(nlos_rng, -1.4, 1.4);
        s.gain = std::polar(1.0, detail::uniform(nlos_rng, 0.0, 2.0 * std::numbers::pi));
        s.extra_loss_db = detail::uniform(nlos_rng, 0.0, 3.0);
    }

    std::vector<ChannelSnapshot> snaps(cfg.num_slots);
    for (std::size_t n = 0; n < cfg.num_slots; ++n) {
        const Point2 ut = detail::ut_position(cfg, n);
        if (!(ut.y - cfg.bs_position_m.y > 0.0))
            throw ConfigError("UT leaves the BS sector at slot " + std::to_string(n));
        double aod = detail::los_aod(cfg.bs_position_m, ut);
        if (cfg.aod_jitter_std_rad > 0.0) aod += cfg.aod_jitter_std_rad * detail::gaussian(jitter_rng);
        if (!aod_in_sector(aod)) throw ConfigError("LOS AoD leaves (-pi/2, pi/2) at slot " + std::to_string(n));

        const double dist = std::hypot(ut.x - cfg.bs_position_m.x, ut.y - cfg.bs_position_m.y);
        const double los_loss = std::max(1.0, dist * dist);
        auto& snap = snaps[n];
        snap.slot_index = n;
        snap.paths.reserve(1 + scatter.size());
        snap.paths.push_back({aod, los_gain, los_loss});
        for (const auto& s : scatter) {
            const double loss_db = cfg.nlos_relative_loss_db + s.extra_loss_db;
            snap.paths.push_back({s.aod, s.gain, los_loss * std::pow(10.0, loss_db / 10.0)});
        }
    }
    return snaps;
}

inline std::vector<TraceRecord> trace_from_trajectory(std::span<const ChannelSnapshot> snaps, const Codebook& cb) {
    if (snaps.empty()) throw DomainError("trace_from_trajectory: empty trajectory");
    std::vector<TraceRecord> trace;
    trace.reserve(snaps.size());
    for (const auto& snap : snaps) {
        validate(snap);
        const CVector h = channel_vector(snap, cb.num_antennas, cb.antenna_spacing_over_wavelength);
        trace.push_back({snap.slot_index, optimal_beam(h, cb), snap.los().aod_rad});
    }
    return trace;
}

inline Trajectory simulate(const TrajectoryConfig& cfg) {
    Trajectory t;
    t.snapshots = generate_trajectory(cfg);
    t.trace = trace_from_trajectory(t.snapshots, cfg.codebook());
    return t;
}

/// C=2 x U input block for the window starting at `start`.
inline std::vector<float> window_input(std::span<const TraceRecord> trace, std::size_t start, std::size_t u, std::uint32_t q_count) {
    std::vector<float> x(2 * u);
    for (std::size_t t = 0; t < u; ++t) {
        const auto& r = trace[start + t];
        x[t] = static_cast<float>(static_cast<double>(r.opt_beam) / q_count);
        x[u + t] = static_cast<float>(r.aod_rad);
    }
    return x;
}

inline std::size_t window_count(std::size_t trace_len, std::size_t u, std::size_t h, std::size_t stride) {
    if (trace_len < u + h) return 0;
    return (trace_len - u - h) / stride + 1;
}

inline std::vector<WindowedSample> window_trace(std::span<const TraceRecord> trace, std::size_t u, std::size_t h, std::size_t stride, std::uint32_t q_count) {
    if (stride < 1) throw ConfigError("window stride must be >= 1");
    if (q_count < 1) throw ConfigError("q_count must be >= 1");
    for (const auto& r : trace)
        if (r.opt_beam >= q_count)
            throw RangeError("beam index " + std::to_string(r.opt_beam) + " at slot " + std::to_string(r.slot) + " exceeds q_count " + std::to_string(q_count));
    const std::size_t n = window_count(trace.size(), u, h, stride);
    std::vector<WindowedSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = i * stride;
        WindowedSample s;
        s.c = 2;
        s.u = u;
        s.q_count = q_count;
        s.x = window_input(trace, start, u, q_count);
        s.y.resize(h);
        for (std::size_t k = 0; k < h; ++k) s.y[k] = static_cast<float>(static_cast<double>(trace[start + u + k].opt_beam) / q_count);
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trace CSV

inline std::vector<TraceRecord> parse_trace_csv(std::istream& in, std::size_t q_count) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty trace file", 1);
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(detail::trim(col));
    }
    std::array<int, 3> index{-1, -1, -1};
    const std::array<std::string, 3> names{"slot", "opt_beam", "aod_rad"};
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t k = 0; k < 3; ++k)
            if (cols[c] == names[k]) index[k] = static_cast<int>(c);
    for (std::size_t k = 0; k < 3; ++k)
        if (index[k] < 0) throw ParseError("header is missing column `" + names[k] + "`", 1);

    std::vector<TraceRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(detail::trim(f));
        if (fields.size() != cols.size())
            throw ParseError("expected " + std::to_string(cols.size()) + " fields, got " + std::to_string(fields.size()), line_no);
        auto parse_num = [&](const std::string& text, auto& value, const std::string& col) {
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (ec != std::errc() || ptr != text.data() + text.size()) throw ParseError("bad value `" + text + "` in column `" + col + "`", line_no);
        };
        TraceRecord r;
        long long slot = 0, beam = 0;
        parse_num(fields[index[0]], slot, "slot");
        parse_num(fields[index[1]], beam, "opt_beam");
        parse_num(fields[index[2]], r.aod_rad, "aod_rad");
        const long long expected = static_cast<long long>(out.size());
        if (slot != expected)
            throw ParseError("slot " + std::to_string(slot) + " breaks the consecutive sequence (expected " + std::to_string(expected) + ")", line_no);
        if (beam < 0 || static_cast<std::size_t>(beam) >= q_count)
            throw RangeError("line " + std::to_string(line_no) + ": beam index " + std::to_string(beam) + " not in [0, " + std::to_string(q_count) + ")");
        if (!aod_in_sector(r.aod_rad)) throw RangeError("line " + std::to_string(line_no) + ": AoD outside (-pi/2, pi/2)");
        r.slot = static_cast<std::size_t>(slot);
        r.opt_beam = static_cast<std::size_t>(beam);
        out.push_back(r);
    }
    return out;
}

inline std::vector<TraceRecord> ingest_external_trace(const std::string& path, std::size_t q_count) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace " + path);
    return parse_trace_csv(in, q_count);
}

inline void write_trace_csv(std::ostream& os, std::span<const TraceRecord> trace) {
    os << "slot,opt_beam,aod_rad\n";
    for (const auto& r : trace) os << r.slot << ',' << r.opt_beam << ',' << detail::fixed_decimal(r.aod_rad) << '\n';
}

inline void write_trace_csv(const std::string& path, std::span<const TraceRecord> trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_trace_csv(out, trace);
}

// ---------------------------------------------------------------------------
// BPDS dataset

struct Dataset {
    std::uint16_t c = 2;
    std::uint16_t u = 40;
    std::uint16_t h = 10;
    std::uint32_t q_count = 64;
    std::vector<WindowedSample> samples;
};

inline void write_dataset(std::ostream& os, const Dataset& ds) {
    io::put_magic(os, "BPDS");
    io::put<std::uint16_t>(os, 1);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.samples.size()));
    io::put<std::uint16_t>(os, ds.c);
    io::put<std::uint16_t>(os, ds.u);
    io::put<std::uint16_t>(os, ds.h);
    io::put<std::uint32_t>(os, ds.q_count);
    for (const auto& s : ds.samples) {
        if (s.x.size() != std::size_t(ds.c) * ds.u || s.y.size() != ds.h || s.q_count != ds.q_count)
            throw ShapeError("write_dataset: sample shape does not match header");
        for (float v : s.x) io::put<float>(os, v);
        for (float v : s.y) io::put<float>(os, v);
    }
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_dataset(out, ds);
    if (!out) throw IoError("write failed for " + path);
}

inline Dataset read_dataset(std::istream& is) {
    io::expect_magic(is, "BPDS");
    if (io::get<std::uint16_t>(is, "version") != 1) throw IoError("unsupported BPDS version");
    Dataset ds;
    const auto n = io::get<std::uint32_t>(is, "sample count");
    ds.c = io::get<std::uint16_t>(is, "C");
    ds.u = io::get<std::uint16_t>(is, "U");
    ds.h = io::get<std::uint16_t>(is, "H");
    ds.q_count = io::get<std::uint32_t>(is, "q_count");
    ds.samples.resize(n);
    for (auto& s : ds.samples) {
        s.c = ds.c;
        s.u = ds.u;
        s.q_count = ds.q_count;
        s.x.resize(std::size_t(ds.c) * ds.u);
        s.y.resize(ds.h);
        for (float& v : s.x) v = io::get<float>(is, "sample payload");
        for (float& v : s.y) v = io::get<float>(is, "sample target");
    }
    return ds;
}

inline Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset " + path);
    return read_dataset(in);
}

/// Seeded Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(detail::splitmix64(seed));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    return perm;
}

/// Windows traces (never across trajectory boundaries) and shuffles the union.
inline Dataset dataset_from_traces(std::span<const std::vector<TraceRecord>> traces, std::uint32_t q_count, std::size_t u, std::size_t h, std::size_t stride, std::uint64_t shuffle_seed) {
    Dataset ds;
    ds.c = 2;
    ds.u = static_cast<std::uint16_t>(u);
    ds.h = static_cast<std::uint16_t>(h);
    ds.q_count = q_count;
    std::vector<WindowedSample> all;
    for (const auto& tr : traces) {
        auto w = window_trace(tr, u, h, stride, q_count);
        all.insert(all.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    const auto perm = seeded_permutation(all.size(), shuffle_seed);
    ds.samples.reserve(all.size());
    for (std::size_t i : perm) ds.samples.push_back(std::move(all[i]));
    return ds;
}

inline Dataset build_dataset(std::span<const TrajectoryConfig> cfgs, std::size_t u, std::size_t h, std::size_t stride, std::uint64_t shuffle_seed, std::size_t workers = 1) {
    if (cfgs.empty()) throw ConfigError("build_dataset: no trajectory configs");
    const std::size_t q = cfgs.front().num_beams;
    for (const auto& c : cfgs)
        if (c.num_beams != q) throw ConfigError("build_dataset: all trajectories must share one beam count");
    std::vector<std::vector<TraceRecord>> traces(cfgs.size());
    parallel_for(cfgs.size(), workers, [&](std::size_t i) { traces[i] = simulate(cfgs[i]).trace; });
    return dataset_from_traces(traces, static_cast<std::uint32_t>(q), u, h, stride, shuffle_seed);
}

// ---------------------------------------------------------------------------
// BPSN snapshot file: magic, u16 version, u32 slots; per slot u32 index, u16 paths,
// then per path f64 aod, f64 gain re, f64 gain im, f64 path loss.

inline void write_snapshots(std::ostream& os, std::span<const ChannelSnapshot> snaps) {
    io::put_magic(os, "BPSN");
    io::put<std::uint16_t>(os, 1);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(snaps.size()));
    for (const auto& s : snaps) {
        io::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.slot_index));
        io::put<std::uint16_t>(os, static_cast<std::uint16_t>(s.paths.size()));
        for (const auto& p : s.paths) {
            io::put<double>(os, p.aod_rad);
            io::put<double>(os, p.complex_gain.real());
            io::put<double>(os, p.complex_gain.imag());
            io::put<double>(os, p.path_loss);
        }
    }
}

inline std::vector<ChannelSnapshot> read_snapshots(std::istream& is) {
    io::expect_magic(is, "BPSN");
    if (io::get<std::uint16_t>(is, "version") != 1) throw IoError("unsupported BPSN version");
    std::vector<ChannelSnapshot> snaps(io::get<std::uint32_t>(is, "slot count"));
    for (auto& s : snaps) {
        s.slot_index = io::get<std::uint32_t>(is, "slot index");
        s.paths.resize(io::get<std::uint16_t>(is, "path count"));
        for (auto& p : s.paths) {
            p.aod_rad = io::get<double>(is, "aod");
            const double re = io::get<double>(is, "gain");
            const double im = io::get<double>(is, "gain");
            p.complex_gain = cplx(re, im);
            p.path_loss = io::get<double>(is, "path loss");
        }
    }
    return snaps;
}

// ---------------------------------------------------------------------------
// Scenario sets: families of trajectories standing in for one BS deployment.

struct ScenarioSetConfig {
    std::size_t num_trajectories = 200;
    std::size_t num_slots = 100;
    std::vector<double> speeds_mps{5.0, 10.0, 15.0, 20.0};
    std::size_t num_antennas = 64;
    std::size_t num_beams = 64;
    double carrier_freq_ghz = 28.0;
    std::string geometry = "bs1";  // bs1 | bs2
    std::size_t num_nlos_paths = 2;
    double nlos_relative_loss_db = 10.0;
    double aod_jitter_std_rad = 0.0;
    std::uint64_t seed = 1;
};

/// LOS AoD is kept inside [min, max] over the whole trajectory so beam indices do
/// not wrap around the codebook edge.
inline constexpr double kScenarioMinAod = 0.05;
inline constexpr double kScenarioMaxAod = 1.35;

inline std::vector<TrajectoryConfig> make_scenario_set(const ScenarioSetConfig& sc) {
    if (sc.speeds_mps.empty()) throw ConfigError("scenario set needs at least one speed");
    if (sc.geometry != "bs1" && sc.geometry != "bs2") throw ConfigError("unknown geometry `" + sc.geometry + "` (expected bs1 or bs2)");
    std::vector<TrajectoryConfig> out;
    out.reserve(sc.num_trajectories);
    for (std::size_t i = 0; i < sc.num_trajectories; ++i) {
        TrajectoryConfig cfg;
        cfg.num_slots = sc.num_slots;
        cfg.ut_speed_mps = sc.speeds_mps[i % sc.speeds_mps.size()];
        cfg.carrier_freq_ghz = sc.carrier_freq_ghz;
        cfg.num_antennas = sc.num_antennas;
        cfg.num_beams = sc.num_beams;
        cfg.num_nlos_paths = sc.num_nlos_paths;
        cfg.nlos_relative_loss_db = sc.nlos_relative_loss_db;
        cfg.aod_jitter_std_rad = sc.aod_jitter_std_rad;
        cfg.seed = detail::splitmix64(sc.seed * 0x100000001b3ULL + i);
        std::mt19937_64 rng(cfg.seed ^ 0xa54ff53a5f1d36f1ULL);
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            if (sc.geometry == "bs1") {
                // street parallel to the array, 15-40 m away
                cfg.bs_position_m = {0.0, 0.0};
                cfg.ut_start_m = {detail::uniform(rng, 3.0, 50.0), detail::uniform(rng, 15.0, 40.0)};
                const double base = (rng() & 1) ? 0.0 : std::numbers::pi;
                cfg.ut_heading_rad = base + detail::uniform(rng, -0.35, 0.35);
            } else {
                // BS mounted closer to a diagonal road
                cfg.bs_position_m = {5.0, -4.0};
                cfg.ut_start_m = {detail::uniform(rng, 6.0, 35.0), detail::uniform(rng, 4.0, 12.0)};
                const double base = (rng() & 1) ? std::numbers::pi / 4.0 : 5.0 * std::numbers::pi / 4.0;
                cfg.ut_heading_rad = base + detail::uniform(rng, -0.3, 0.3);
            }
            placed = true;
            for (std::size_t n = 0; n < cfg.num_slots && placed; ++n) {
                const Point2 ut = detail::ut_position(cfg, n);
                if (ut.y - cfg.bs_position_m.y <= 1.0) {
                    placed = false;
                    break;
                }
                const double aod = detail::los_aod(cfg.bs_position_m, ut);
                if (aod < kScenarioMinAod || aod > kScenarioMaxAod) placed = false;
            }
        }
        if (!placed) throw ConfigError("could not place trajectory " + std::to_string(i) + " inside the AoD sector");
        out.push_back(cfg);
    }
    return out;
}

inline ScenarioSetConfig scenario_set_from_config(const KeyValueConfig& kv, const std::string& prefix = "data.") {
    ScenarioSetConfig sc;
    sc.num_trajectories = kv.get<std::size_t>(prefix + "trajectories", sc.num_trajectories);
    sc.num_slots = kv.get<std::size_t>(prefix + "slots", sc.num_slots);
    sc.speeds_mps = kv.get_list<double>(prefix + "speeds", sc.speeds_mps);
    sc.num_antennas = kv.get<std::size_t>(prefix + "antennas", sc.num_antennas);
    sc.num_beams = kv.get<std::size_t>(prefix + "beams", sc.num_antennas);
    sc.carrier_freq_ghz = kv.get<double>(prefix + "carrier_ghz", sc.carrier_freq_ghz);
    sc.geometry = kv.get<std::string>(prefix + "geometry", sc.geometry);
    sc.num_nlos_paths = kv.get<std::size_t>(prefix + "nlos_paths", sc.num_nlos_paths);
    sc.nlos_relative_loss_db = kv.get<double>(prefix + "nlos_loss_db", sc.nlos_relative_loss_db);
    sc.aod_jitter_std_rad = kv.get<double>(prefix + "aod_jitter_rad", sc.aod_jitter_std_rad);
    sc.seed = kv.get<std::uint64_t>(prefix + "seed", sc.seed);
    return sc;
}

}  // namespace beampred
