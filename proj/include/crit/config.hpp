#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crit/criticality.hpp"
#include "crit/measures.hpp"

namespace crit {

/// Experiment settings read from flat `key = value` text. `#` starts a comment.
/// `piece` and `atom` may repeat (optionally prefixed, e.g. measure.0.piece);
/// every other key may appear once.
struct Config {
    int b = 2;
    std::uint64_t seed = 0;
    double v = 1.0;
    std::int64_t samples = 100'000;
    int depth_cap = 10'000;
    std::int64_t size_cap = 100'000;  // simulate: runs stop growing here
    int workers = 0;  // 0: all hardware threads
    std::size_t nodes = 4096;

    double zeta_tol = 1e-10;
    int zeta_iter_cap = 20'000;
    double fp_tol = 1e-10;
    int fp_iter_cap = 100'000;
    double lambda = 1e-6;
    double chi_tol = 1e-12;

    double psi_theta_max = 0.0;  // 0: theta_b + 1 for psi-v, theta_b for psi and binf
    int psi_n_max = 200;
    double psi_eps = 1e-6;

    int vn_n = 4;
    std::int64_t tail_n_max = 1000;
    double fit_lo = 100;
    double fit_hi = 10'000;
    int fit_points = 21;
    int depth_proxy = 1000;
    double crit_tol = 1e-4;

    std::string oracle_kind = "tail";  // tail | zn | survival
    double oracle_theta = 1.0;
    int oracle_n = 10;

    std::optional<Measure> measure;
    std::optional<MixtureFamily> family;
    std::vector<double> alphas;

    /// Every key with its resolved value, sorted; workers excluded so that
    /// output does not depend on the thread count.
    std::map<std::string, std::string> resolved;

    [[nodiscard]] const Measure& require_measure() const;
    [[nodiscard]] const MixtureFamily& require_family() const;
};

/// Throws ValidationError listing every problem found, one per line.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

/// Shortest round-trip decimal form.
std::string format_number(double x);

}  // namespace crit
