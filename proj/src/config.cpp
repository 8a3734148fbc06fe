// JSON config loading. Field names mirror the SimConfig structure; missing
// fields keep their defaults.

#include <fstream>

#include <json.hpp>

#include "isac/errors.hpp"
#include "isac/harness.hpp"

namespace isac {

namespace {

using nlohmann::json;

Eigen::Vector2d vec2(const json& j) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("expected a [x, y] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void opt_get(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SimConfig default_config() { return SimConfig{}; }

SimConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    SimConfig cfg;

    if (j.contains("frame")) {
        const auto& f = j.at("frame");
        opt_get(f, "M", cfg.frame.M);
        opt_get(f, "N", cfg.frame.N);
        opt_get(f, "delta_f", cfg.frame.delta_f);
        opt_get(f, "f_c", cfg.frame.f_c);
        opt_get(f, "modulation_order", cfg.frame.modulation_order);
        opt_get(f, "cp_len", cfg.frame.cp_len);
    }

    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        if (s.contains("anchor")) cfg.scene.anchor = vec2(s.at("anchor"));
        if (s.contains("region")) {
            const auto& r = s.at("region");
            if (!r.is_array() || r.size() != 4)
                throw ConfigError("region must be [xmin, xmax, ymin, ymax]");
            cfg.scene.region = {r[0].get<double>(), r[1].get<double>(),
                                r[2].get<double>(), r[3].get<double>()};
        }
        if (s.contains("receivers")) {
            cfg.scene.receivers.clear();
            for (const auto& rx : s.at("receivers"))
                cfg.scene.receivers.push_back(vec2(rx));
        }
        opt_get(s, "n_antennas", cfg.scene.n_antennas);
        if (s.contains("targets")) {
            cfg.targets.clear();
            for (const auto& t : s.at("targets")) {
                TargetTruth truth;
                if (t.contains("position")) truth.position = vec2(t.at("position"));
                if (t.contains("velocity")) truth.velocity = vec2(t.at("velocity"));
                cfg.targets.push_back(truth);
            }
        }
        opt_get(s, "randomize_targets", cfg.randomize_targets);
        opt_get(s, "initial_speed", cfg.initial_speed);
    }

    if (j.contains("motion")) {
        const auto& m = j.at("motion");
        opt_get(m, "delta", cfg.motion.delta);
        opt_get(m, "psi", cfg.motion.psi);
        opt_get(m, "dt", cfg.motion.dt);
        if (m.contains("omega")) cfg.motion.omega = vec2(m.at("omega"));
    }

    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        opt_get(e, "doppler_span", cfg.doppler_span);
        opt_get(e, "doppler_step", cfg.doppler_step);
        opt_get(e, "refine_doppler", cfg.refine_doppler);
        opt_get(e, "refine_gains", cfg.refine_gains);
    }

    if (j.contains("fusion")) {
        const auto& f = j.at("fusion");
        opt_get(f, "xi", cfg.fusion.xi);
        opt_get(f, "det_threshold", cfg.fusion.det_threshold);
    }

    if (j.contains("isac")) {
        const auto& i = j.at("isac");
        opt_get(i, "mu", cfg.isac.mu);
        opt_get(i, "eta", cfg.isac.eta);
        opt_get(i, "eps_inner", cfg.isac.eps_inner);
        opt_get(i, "max_inner", cfg.isac.max_inner);
        opt_get(i, "eps_outer_gain", cfg.isac.eps_outer_gain);
        opt_get(i, "eps_outer_delay", cfg.isac.eps_outer_delay);
        opt_get(i, "eps_outer_doppler", cfg.isac.eps_outer_doppler);
        opt_get(i, "max_outer", cfg.isac.max_outer);
        opt_get(i, "mmse_max_dim", cfg.isac.mmse_max_dim);
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        opt_get(s, "snr_db", cfg.sweep.snr_db);
        opt_get(s, "target_counts", cfg.sweep.target_counts);
        opt_get(s, "schemes", cfg.sweep.schemes);
        opt_get(s, "trials", cfg.sweep.trials);
        opt_get(s, "steps", cfg.sweep.steps);
        opt_get(s, "master_seed", cfg.sweep.master_seed);
        opt_get(s, "threads", cfg.sweep.threads);
    }

    opt_get(j, "pilot_power", cfg.pilot_power);
    opt_get(j, "include_direct_path", cfg.include_direct_path);
    if (j.contains("r_floor")) {
        const auto& r = j.at("r_floor");
        if (!r.is_array() || r.size() != 4)
            throw ConfigError("r_floor must be a 4-element array");
        for (int i = 0; i < 4; ++i) cfg.r_floor(i) = r[i].get<double>();
    }

    return cfg;
}

}  // namespace isac
