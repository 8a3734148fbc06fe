#include "isac/modem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "isac/errors.hpp"

namespace isac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int level_count(int order) {
    switch (order) {
        case 4: return 2;
        case 16: return 4;
        case 64: return 8;
        default:
            throw ConfigError("modulation_order must be 4, 16 or 64");
    }
}

// Per-axis scale for unit average symbol energy: E = 2*(L^2-1)/3.
double axis_scale(int levels) {
    return 1.0 / std::sqrt(2.0 * (static_cast<double>(levels) * levels - 1.0) / 3.0);
}

unsigned gray_decode(unsigned g) {
    for (unsigned shift = 1; shift < 8; shift <<= 1) g ^= g >> shift;
    return g;
}

unsigned gray_encode(unsigned b) { return b ^ (b >> 1); }

double axis_level(unsigned gray_bits, int levels, double scale) {
    const unsigned idx = gray_decode(gray_bits);
    return (2.0 * static_cast<double>(idx) - (levels - 1)) * scale;
}

unsigned axis_demap(double x, int levels, double scale) {
    long idx = std::lround((x / scale + (levels - 1)) / 2.0);
    idx = std::clamp(idx, 0L, static_cast<long>(levels - 1));
    return gray_encode(static_cast<unsigned>(idx));
}

}  // namespace

void FrameConfig::validate() const {
    if (M < 2 || N < 2) throw ConfigError("frame requires M >= 2 and N >= 2");
    if (delta_f <= 0.0) throw ConfigError("delta_f must be positive");
    if (f_c <= 0.0) throw ConfigError("f_c must be positive");
    level_count(modulation_order);
    if (cp_len < 0) throw ConfigError("cp_len must be non-negative");
}

double DDFrame::pilot_amplitude() const {
    return std::sqrt(static_cast<double>(M) * N * pilot_power);
}

std::vector<cplx> DDFrame::combined() const {
    std::vector<cplx> d = data;
    d[static_cast<std::size_t>(pilot_k) * M + pilot_l] += pilot_amplitude();
    return d;
}

std::vector<cplx> DDFrame::pilot_only() const {
    std::vector<cplx> d(static_cast<std::size_t>(M) * N, cplx{0.0, 0.0});
    d[static_cast<std::size_t>(pilot_k) * M + pilot_l] = pilot_amplitude();
    return d;
}

void DDFrame::validate(const FrameConfig& cfg) const {
    if (M != cfg.M || N != cfg.N || data.size() != cfg.grid_size())
        throw ConfigError("frame dimensions do not match the configuration");
    if (pilot_l < 0 || pilot_l >= M || pilot_k < 0 || pilot_k >= N)
        throw ConfigError("pilot position outside the grid");
    if (pilot_power < 0.0) throw ConfigError("pilot power must be non-negative");
}

// ---------------------------------------------------------------------------
// QAM
// ---------------------------------------------------------------------------

int qam_bits_per_symbol(int order) {
    const int levels = level_count(order);
    int b = 0;
    while ((1 << b) < levels) ++b;
    return 2 * b;
}

std::vector<cplx> qam_map(std::span<const std::uint8_t> bits, int order) {
    const int bps = qam_bits_per_symbol(order);
    if (bits.size() % bps != 0)
        throw InputError("bit count not divisible by bits per symbol");
    const int levels = level_count(order);
    const double scale = axis_scale(levels);
    const int half = bps / 2;

    std::vector<cplx> out(bits.size() / bps);
    for (std::size_t s = 0; s < out.size(); ++s) {
        unsigned gi = 0, gq = 0;
        for (int b = 0; b < half; ++b) gi = (gi << 1) | (bits[s * bps + b] & 1u);
        for (int b = 0; b < half; ++b) gq = (gq << 1) | (bits[s * bps + half + b] & 1u);
        out[s] = {axis_level(gi, levels, scale), axis_level(gq, levels, scale)};
    }
    return out;
}

std::vector<std::uint8_t> qam_demap(std::span<const cplx> symbols, int order) {
    const int bps = qam_bits_per_symbol(order);
    const int levels = level_count(order);
    const double scale = axis_scale(levels);
    const int half = bps / 2;

    std::vector<std::uint8_t> bits(symbols.size() * bps);
    for (std::size_t s = 0; s < symbols.size(); ++s) {
        const unsigned gi = axis_demap(symbols[s].real(), levels, scale);
        const unsigned gq = axis_demap(symbols[s].imag(), levels, scale);
        for (int b = 0; b < half; ++b)
            bits[s * bps + b] = static_cast<std::uint8_t>((gi >> (half - 1 - b)) & 1u);
        for (int b = 0; b < half; ++b)
            bits[s * bps + half + b] = static_cast<std::uint8_t>((gq >> (half - 1 - b)) & 1u);
    }
    return bits;
}

cplx qam_nearest(cplx x, int order) {
    const int levels = level_count(order);
    const double scale = axis_scale(levels);
    const unsigned gi = axis_demap(x.real(), levels, scale);
    const unsigned gq = axis_demap(x.imag(), levels, scale);
    return {axis_level(gi, levels, scale), axis_level(gq, levels, scale)};
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

Modem::Modem(const FrameConfig& cfg) {
    cfg.validate();
    auto plan = std::make_shared<Plan>();
    plan->cfg = cfg;
    const int n = cfg.N;
    const double root = 1.0 / std::sqrt(static_cast<double>(n));
    plan->w_fwd.resize(static_cast<std::size_t>(n) * n);
    plan->w_inv.resize(static_cast<std::size_t>(n) * n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            // Reduce the index product mod N before evaluating to keep the
            // matrix unitary to a few ulps at any size.
            const double ang = kTwoPi * static_cast<double>((a * b) % n) / n;
            const cplx w{std::cos(ang), std::sin(ang)};
            plan->w_fwd[static_cast<std::size_t>(a) * n + b] = root * std::conj(w);
            plan->w_inv[static_cast<std::size_t>(a) * n + b] = root * w;
        }
    }
    plan_ = std::move(plan);
}

namespace {

// out[a*M .. a*M+M) = sum_b W[a*N+b] * in[b*M .. b*M+M)
void doppler_transform(const Modem::Plan& plan, const std::vector<cplx>& w,
                       const cplx* in, cplx* out) {
    const int m = plan.cfg.M, n = plan.cfg.N;
    const auto& k = kern::active();
    std::fill(out, out + plan.cfg.grid_size(), cplx{0.0, 0.0});
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            k.axpy(w[static_cast<std::size_t>(a) * n + b],
                   in + static_cast<std::size_t>(b) * m,
                   out + static_cast<std::size_t>(a) * m,
                   static_cast<std::size_t>(m));
        }
    }
}

}  // namespace

void Modem::modulate_into(const cplx* d, cplx* s) const {
    doppler_transform(*plan_, plan_->w_inv, d, s);
}

void Modem::demodulate_into(const cplx* r, cplx* y) const {
    doppler_transform(*plan_, plan_->w_fwd, r, y);
}

std::vector<cplx> Modem::modulate(std::span<const cplx> d) const {
    if (d.size() != dim()) throw ConfigError("modulate: vector length != M*N");
    std::vector<cplx> s(dim());
    modulate_into(d.data(), s.data());
    return s;
}

std::vector<cplx> Modem::demodulate(std::span<const cplx> r) const {
    if (r.size() != dim()) throw ConfigError("demodulate: vector length != M*N");
    std::vector<cplx> y(dim());
    demodulate_into(r.data(), y.data());
    return y;
}

DDShiftOp Modem::shift_op(double delay, double doppler) const {
    const double total = static_cast<double>(dim());
    if (std::abs(delay - std::round(delay)) > 1e-9)
        throw ConfigError("delay shifts must be integer-valued samples");
    const long l = std::lround(delay);
    if (l < 0 || l >= static_cast<long>(dim()))
        throw ConfigError("delay shift outside [0, M*N)");
    if (std::abs(doppler) >= total)
        throw ConfigError("Doppler shift outside (-M*N, M*N)");
    return DDShiftOp(plan_, l, doppler);
}

void cyclic_shift(const cplx* in, cplx* out, std::size_t n_total, long l) {
    const std::size_t shift = static_cast<std::size_t>(l);
    std::copy(in, in + (n_total - shift), out + shift);
    std::copy(in + (n_total - shift), in + n_total, out);
}

DDShiftOp::DDShiftOp(std::shared_ptr<const Modem::Plan> plan, long l, double k)
    : plan_(std::move(plan)), l_(l), k_(k) {
    const std::size_t total = plan_->cfg.grid_size();
    ramp_.resize(total);
    kern::active().phase_ramp(0.0, kTwoPi * k_ / static_cast<double>(total),
                              ramp_.data(), total);
}

std::size_t DDShiftOp::dim() const { return plan_->cfg.grid_size(); }

void DDShiftOp::apply(const cplx* in, cplx* out) const {
    const std::size_t total = dim();
    const auto& k = kern::active();
    std::vector<cplx> t(total), u(total);
    doppler_transform(*plan_, plan_->w_inv, in, t.data());  // (F_N^H kron I)
    k.cmul(ramp_.data(), t.data(), t.data(), total);        // Delta^k
    cyclic_shift(t.data(), u.data(), total, l_);            // Pi^l
    doppler_transform(*plan_, plan_->w_fwd, u.data(), out); // (F_N kron I)
}

void DDShiftOp::apply_adjoint(const cplx* in, cplx* out) const {
    const std::size_t total = dim();
    const auto& k = kern::active();
    std::vector<cplx> t(total), u(total);
    doppler_transform(*plan_, plan_->w_inv, in, t.data());
    // Pi^{-l}: u[n] = t[(n + l) mod total]
    cyclic_shift(t.data(), u.data(), total,
                 (static_cast<long>(total) - l_) % static_cast<long>(total));
    k.cmul_conj(ramp_.data(), u.data(), u.data(), total);   // Delta^{-k}
    doppler_transform(*plan_, plan_->w_fwd, u.data(), out);
}

std::vector<cplx> DDShiftOp::apply(std::span<const cplx> in) const {
    if (in.size() != dim()) throw ConfigError("operator input length != M*N");
    std::vector<cplx> out(dim());
    apply(in.data(), out.data());
    return out;
}

std::vector<cplx> modulate(const DDFrame& frame, const FrameConfig& cfg) {
    frame.validate(cfg);
    const auto d = frame.combined();
    return Modem(cfg).modulate(d);
}

std::vector<cplx> demodulate(std::span<const cplx> r, const FrameConfig& cfg) {
    return Modem(cfg).demodulate(r);
}

DDShiftOp dd_operator(double delay, double doppler, const FrameConfig& cfg) {
    return Modem(cfg).shift_op(delay, doppler);
}

}  // namespace isac
