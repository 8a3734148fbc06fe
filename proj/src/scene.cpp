#include "isac/scene.hpp"

#include "isac/errors.hpp"

namespace isac {

void NodeSet::validate() const {
    if (receivers.size() < 2)
        throw ConfigError("multistatic scene needs at least two receivers");
    if (!region.contains(anchor)) throw ConfigError("anchor outside region");
    for (const auto& r : receivers) {
        if (!region.contains(r)) throw ConfigError("receiver outside region");
        if ((r - anchor).norm() < 1e-9)
            throw ConfigError("receiver coincides with the anchor");
    }
    if (n_antennas < 1) throw ConfigError("n_antennas must be >= 1");
}

std::vector<LinkTruth> ground_truth_links(const NodeSet& nodes,
                                          const TargetTruth& target,
                                          const FrameConfig& cfg) {
    const auto radial = [&](const Eigen::Vector2d& node) {
        const Eigen::Vector2d d = node - target.position;
        const double rho = d.norm();
        if (rho < 1e-9)
            throw InputError("target coincides with a node; unit vector undefined");
        return std::pair<double, double>{rho, target.velocity.dot(d / rho)};
    };

    std::vector<LinkTruth> out;
    out.reserve(nodes.z() + 1);

    const auto [rho0, v0] = radial(nodes.anchor);
    LinkTruth mono;
    mono.range = rho0;
    mono.radial_v = v0;
    mono.delay_s = 2.0 * rho0 / kSpeedOfLight;
    mono.doppler_hz = 2.0 * v0 * cfg.f_c / kSpeedOfLight;
    out.push_back(mono);

    for (const auto& rx : nodes.receivers) {
        const auto [rho, v] = radial(rx);
        LinkTruth bi;
        bi.range = rho;
        bi.radial_v = v;
        bi.delay_s = (rho0 + rho) / kSpeedOfLight;
        bi.doppler_hz = (v0 + v) * cfg.f_c / kSpeedOfLight;
        out.push_back(bi);
    }
    return out;
}

InvertedLinks invert_links(std::span<const LinkEstimate> links,
                           const FrameConfig& cfg,
                           bool paper_literal_doppler) {
    if (links.empty()) throw InputError("invert_links: no link estimates");

    InvertedLinks out;
    out.range.resize(links.size());
    out.radial_v.resize(links.size());

    const double rho0 = links[0].delay_s * kSpeedOfLight / 2.0;
    const double v0 = links[0].doppler_hz * kSpeedOfLight / (2.0 * cfg.f_c);
    out.range[0] = rho0;
    out.radial_v[0] = v0;

    for (std::size_t j = 1; j < links.size(); ++j) {
        double rho = links[j].delay_s * kSpeedOfLight - rho0;
        if (rho <= 0.0) {
            rho = 0.0;
            ++out.clamped_ranges;
        }
        out.range[j] = rho;
        out.radial_v[j] =
            paper_literal_doppler
                ? (links[j].doppler_hz - links[0].doppler_hz) * kSpeedOfLight / cfg.f_c
                : links[j].doppler_hz * kSpeedOfLight / cfg.f_c - v0;
    }
    return out;
}

}  // namespace isac
