#include "isac/channel.hpp"

#include <cmath>
#include <numbers>

#include "isac/errors.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ChannelPath make_path(cplx gain, double delay_s, double doppler_hz,
                      const FrameConfig& cfg) {
    ChannelPath p;
    p.gain = gain;
    p.delay_s = delay_s;
    p.doppler_hz = doppler_hz;
    p.delay_idx = std::lround(delay_s * cfg.M * cfg.delta_f);
    p.doppler_idx = doppler_hz * cfg.N * cfg.symbol_time();
    return p;
}

void ChannelRealization::validate(const FrameConfig& cfg) const {
    if (paths.empty()) throw InputError("channel needs at least one path");
    if (noise_var < 0.0) throw InputError("noise variance must be non-negative");
    const long total = static_cast<long>(cfg.grid_size());
    for (const auto& p : paths) {
        if (p.delay_idx < 0 || p.delay_idx >= total)
            throw InputError("channel path delay index outside [0, M*N)");
        if (std::abs(p.doppler_idx) >= static_cast<double>(total))
            throw InputError("channel path Doppler index outside (-M*N, M*N)");
    }
}

std::vector<cplx> apply_channel(std::span<const cplx> s,
                                const ChannelRealization& ch,
                                const FrameConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ch.validate(cfg);
    const std::size_t total = cfg.grid_size();
    if (s.size() != total) throw ConfigError("apply_channel: length != M*N");

    const auto& k = kern::active();
    std::vector<cplx> r(total, cplx{0.0, 0.0});
    std::vector<cplx> ramped(total);
    std::vector<cplx> ramp(total);
    for (const auto& p : ch.paths) {
        k.phase_ramp(0.0, kTwoPi * p.doppler_idx / static_cast<double>(total),
                     ramp.data(), total);
        k.cmul(ramp.data(), s.data(), ramped.data(), total);
        // r[(m + l) mod total] += h * ramped[m], split at the wrap point
        const std::size_t l = static_cast<std::size_t>(p.delay_idx);
        k.axpy(p.gain, ramped.data(), r.data() + l, total - l);
        k.axpy(p.gain, ramped.data() + (total - l), r.data(), l);
    }
    if (ch.noise_var > 0.0) {
        Rng rng(seed);
        for (auto& v : r) v += rng.cgauss(ch.noise_var);
    }
    return r;
}

double snr_to_noise_var(double snr_db, double signal_power) {
    if (signal_power <= 0.0) throw InputError("signal power must be positive");
    return signal_power / std::pow(10.0, snr_db / 10.0);
}

DDChannelOp::DDChannelOp(const ChannelRealization& ch, const FrameConfig& cfg)
    : DDChannelOp(ch.paths, cfg) {}

DDChannelOp::DDChannelOp(std::vector<ChannelPath> paths, const FrameConfig& cfg)
    : modem_(cfg), paths_(std::move(paths)) {
    ChannelRealization tmp{paths_, 0.0};
    tmp.validate(cfg);
    const std::size_t total = modem_.dim();
    ramps_.reserve(paths_.size());
    for (const auto& p : paths_) {
        std::vector<cplx> ramp(total);
        kern::active().phase_ramp(
            0.0, kTwoPi * p.doppler_idx / static_cast<double>(total),
            ramp.data(), total);
        ramps_.push_back(std::move(ramp));
    }
}

void DDChannelOp::apply(const cplx* in, cplx* out) const {
    const std::size_t total = dim();
    const auto& k = kern::active();
    std::vector<cplx> s(total), ramped(total), acc(total, cplx{0.0, 0.0});
    modem_.modulate_into(in, s.data());
    for (std::size_t q = 0; q < paths_.size(); ++q) {
        k.cmul(ramps_[q].data(), s.data(), ramped.data(), total);
        const std::size_t l = static_cast<std::size_t>(paths_[q].delay_idx);
        k.axpy(paths_[q].gain, ramped.data(), acc.data() + l, total - l);
        k.axpy(paths_[q].gain, ramped.data() + (total - l), acc.data(), l);
    }
    modem_.demodulate_into(acc.data(), out);
}

void DDChannelOp::apply_adjoint(const cplx* in, cplx* out) const {
    const std::size_t total = dim();
    const auto& k = kern::active();
    std::vector<cplx> s(total), shifted(total), tmp(total), acc(total, cplx{0.0, 0.0});
    modem_.modulate_into(in, s.data());
    for (std::size_t q = 0; q < paths_.size(); ++q) {
        // (Pi^l Delta^k)^H = Delta^{-k} Pi^{-l}
        const long l = paths_[q].delay_idx;
        cyclic_shift(s.data(), shifted.data(), total,
                     (static_cast<long>(total) - l) % static_cast<long>(total));
        k.cmul_conj(ramps_[q].data(), shifted.data(), tmp.data(), total);
        k.axpy(std::conj(paths_[q].gain), tmp.data(), acc.data(), total);
    }
    modem_.demodulate_into(acc.data(), out);
}

std::vector<cplx> DDChannelOp::apply(std::span<const cplx> in) const {
    if (in.size() != dim()) throw ConfigError("channel operator length mismatch");
    std::vector<cplx> out(dim());
    apply(in.data(), out.data());
    return out;
}

std::vector<cplx> DDChannelOp::apply_adjoint(std::span<const cplx> in) const {
    if (in.size() != dim()) throw ConfigError("channel operator length mismatch");
    std::vector<cplx> out(dim());
    apply_adjoint(in.data(), out.data());
    return out;
}

Eigen::MatrixXcd DDChannelOp::dense() const {
    const std::size_t n = dim();
    Eigen::MatrixXcd h(n, n);
    std::vector<cplx> e(n, cplx{0.0, 0.0});
    std::vector<cplx> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        apply(e.data(), col.data());
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) h(i, j) = col[i];
    }
    return h;
}

double DDChannelOp::gain_l1() const {
    double s = 0.0;
    for (const auto& p : paths_) s += std::abs(p.gain);
    return s;
}

DDChannelOp effective_dd_channel(const ChannelRealization& ch,
                                 const FrameConfig& cfg) {
    return DDChannelOp(ch, cfg);
}

}  // namespace isac
