#pragma once
// OTFS delay-Doppler modem. Grids are M (delay) x N (Doppler), vectorized
// column-major: d[n*M + l] = D(l, n). The transmit transform is
// s = (F_N^H kron P_tx) d and the receive transform y = (F_N kron P_rx) r,
// with rectangular pulses P_tx = P_rx = I_M. Delay-Doppler shifts act on the
// length-M*N time-domain vector through the cyclic shift Pi and the
// modulation Delta = diag(c^0, ..., c^{MN-1}), c = exp(j*2*pi/(M*N)).

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "isac/kernels.hpp"

namespace isac {

using cplx = std::complex<double>;

struct FrameConfig {
    int M = 64;                  // delay bins
    int N = 16;                  // Doppler bins
    double delta_f = 240e3;      // subcarrier spacing, Hz
    double f_c = 30e9;           // carrier frequency, Hz
    int modulation_order = 4;    // QAM size: 4, 16 or 64
    int cp_len = 0;              // rate-overhead metadata only; signal model is cyclic

    double symbol_time() const { return 1.0 / delta_f; }  // T, so T*delta_f == 1
    std::size_t grid_size() const {
        return static_cast<std::size_t>(M) * static_cast<std::size_t>(N);
    }
    void validate() const;
};

// Information grid plus one superimposed pilot of amplitude sqrt(M*N*sigma_P^2).
struct DDFrame {
    int M = 0, N = 0;
    std::vector<cplx> data;      // D_I, size M*N, column-major
    int pilot_l = 0, pilot_k = 0;
    double pilot_power = 1.0;    // sigma_P^2, average pilot power over the grid

    double pilot_amplitude() const;
    std::vector<cplx> combined() const;    // vec(D_I + D_P)
    std::vector<cplx> pilot_only() const;  // vec(D_P)
    void validate(const FrameConfig& cfg) const;
};

// ---------------------------------------------------------------------------
// Gray-coded unit-average-energy square QAM
// ---------------------------------------------------------------------------

int qam_bits_per_symbol(int order);
std::vector<cplx> qam_map(std::span<const std::uint8_t> bits, int order);
std::vector<std::uint8_t> qam_demap(std::span<const cplx> symbols, int order);
// Nearest constellation point (per-entry projection used by symbol demodulation).
cplx qam_nearest(cplx x, int order);

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

class DDShiftOp;

class Modem {
public:
    explicit Modem(const FrameConfig& cfg);

    const FrameConfig& config() const { return plan_->cfg; }
    std::size_t dim() const { return plan_->cfg.grid_size(); }

    // s = (F_N^H kron I_M) d
    std::vector<cplx> modulate(std::span<const cplx> d) const;
    void modulate_into(const cplx* d, cplx* s) const;

    // y = (F_N kron I_M) r
    std::vector<cplx> demodulate(std::span<const cplx> r) const;
    void demodulate_into(const cplx* r, cplx* y) const;

    // T(l, k). Delay must be integer-valued; Doppler may be fractional.
    DDShiftOp shift_op(double delay, double doppler) const;

    struct Plan {
        FrameConfig cfg;
        std::vector<cplx> w_fwd;  // N x N unitary DFT, row-major
        std::vector<cplx> w_inv;  // conjugate transpose of w_fwd
    };

private:
    friend class DDShiftOp;
    std::shared_ptr<const Plan> plan_;
};

// The joint delay-Doppler operator
//   T(l, k) = (F_N kron I) Pi^l Delta^k (F_N^H kron I).
class DDShiftOp {
public:
    void apply(const cplx* in, cplx* out) const;
    void apply_adjoint(const cplx* in, cplx* out) const;
    std::vector<cplx> apply(std::span<const cplx> in) const;

    long delay() const { return l_; }
    double doppler() const { return k_; }
    std::size_t dim() const;
    const std::vector<cplx>& ramp() const { return ramp_; }

private:
    friend class Modem;
    DDShiftOp(std::shared_ptr<const Modem::Plan> plan, long l, double k);

    std::shared_ptr<const Modem::Plan> plan_;
    long l_ = 0;
    double k_ = 0.0;
    std::vector<cplx> ramp_;  // exp(j*2*pi*k*n/(M*N))
};

// Spec-shaped free functions over a one-shot Modem.
std::vector<cplx> modulate(const DDFrame& frame, const FrameConfig& cfg);
std::vector<cplx> demodulate(std::span<const cplx> r, const FrameConfig& cfg);
DDShiftOp dd_operator(double delay, double doppler, const FrameConfig& cfg);

// Cyclic forward shift on the time-domain sample vector: out[n] = in[(n-l) mod n_total].
void cyclic_shift(const cplx* in, cplx* out, std::size_t n_total, long l);

}  // namespace isac
