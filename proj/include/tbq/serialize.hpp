// Text serialization of apparatus descriptions plus the JSON / CSV output
// writers. Every emitted artifact carries schema_version, config hash, and
// seed for provenance.

#pragma once

#include <cinttypes>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbq/analysis.hpp"
#include "tbq/chain.hpp"
#include "tbq/config.hpp"
#include "tbq/montecarlo.hpp"
#include "tbq/oracle.hpp"

namespace tbq {

using json = nlohmann::json;

namespace detail {

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Apparatus <-> text (one token line per element; doubles at full precision)

inline std::string apparatus_to_text(const Apparatus& a) {
    std::ostringstream out;
    out << "tbq-apparatus 1\n";
    out << "basis " << a.basis << "\n";
    out << "stages " << a.stage_count << "\n";
    out << "input_pol " << pol_char(a.input_pol) << "\n";
    out << "grid " << a.grid.dimension << " " << detail::fmt_double(a.grid.fine_pitch_ps);
    for (auto d : a.grid.coarse_delays_ps) out << " " << d;
    out << "\n";
    for (const auto& e : a.elements) {
        out << "element " << element_kind_name(e);
        if (const auto* wp = std::get_if<Waveplate>(&e)) {
            out << " " << detail::fmt_double(wp->angle_rad);
        } else if (const auto* ps = std::get_if<PolarizingSplitter>(&e)) {
            out << " " << pol_char(ps->kept_pol);
        } else if (const auto* bd = std::get_if<BirefringentDelay>(&e)) {
            out << " " << bd->shift_bins << " " << pol_char(bd->slow_pol);
        } else if (const auto* sw = std::get_if<UltrafastSwitch>(&e)) {
            out << " " << detail::fmt_double(sw->theta_rad) << " "
                << detail::fmt_double(sw->delta_phi_rad) << " "
                << detail::fmt_double(sw->extra_phase_rad);
            for (const auto& t : sw->targets)
                out << " " << t.fine_bin << "@" << t.coarse_ps;
        } else if (const auto* td = std::get_if<PolarizationTimeDelay>(&e)) {
            out << " " << td->offset_ps << " " << pol_char(td->delayed_pol);
        } else if (const auto* at = std::get_if<Attenuator>(&e)) {
            out << " " << detail::fmt_double(at->transmission);
        } else if (const auto* pc = std::get_if<PhaseCorrector>(&e)) {
            for (double p : pc->phases_rad) out << " " << detail::fmt_double(p);
        }
        out << "\n";
    }
    return out.str();
}

inline Apparatus apparatus_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Apparatus a;
    bool header = false, grid_seen = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag.front() == '#') continue;
        if (tag == "tbq-apparatus") {
            int version = 0;
            ls >> version;
            if (version != 1)
                throw Error(ErrorCode::config_error,
                            "unsupported apparatus format version");
            header = true;
        } else if (tag == "basis") {
            ls >> a.basis;
        } else if (tag == "stages") {
            ls >> a.stage_count;
        } else if (tag == "input_pol") {
            char c = 'H';
            ls >> c;
            a.input_pol = pol_from_char(c);
        } else if (tag == "grid") {
            ls >> a.grid.dimension >> a.grid.fine_pitch_ps;
            std::int64_t d;
            a.grid.coarse_delays_ps.clear();
            while (ls >> d) a.grid.coarse_delays_ps.push_back(d);
            grid_seen = true;
        } else if (tag == "element") {
            std::string kind;
            ls >> kind;
            if (kind == "hwp" || kind == "qwp") {
                Waveplate wp{kind == "hwp" ? WaveplateKind::half
                                           : WaveplateKind::quarter,
                             0.0};
                ls >> wp.angle_rad;
                a.elements.push_back(wp);
            } else if (kind == "pbs") {
                char c = 'H';
                ls >> c;
                a.elements.push_back(PolarizingSplitter{pol_from_char(c)});
            } else if (kind == "bbo") {
                BirefringentDelay bd;
                char c = 'V';
                ls >> bd.shift_bins >> c;
                bd.slow_pol = pol_from_char(c);
                a.elements.push_back(bd);
            } else if (kind == "ups") {
                UltrafastSwitch sw;
                ls >> sw.theta_rad >> sw.delta_phi_rad >> sw.extra_phase_rad;
                std::string tok;
                while (ls >> tok) {
                    auto at = tok.find('@');
                    if (at == std::string::npos)
                        throw Error(ErrorCode::config_error,
                                    "switch target must look like fine@coarse_ps");
                    sw.targets.push_back({std::stoi(tok.substr(0, at)),
                                          std::stoll(tok.substr(at + 1))});
                }
                a.elements.push_back(sw);
            } else if (kind == "ptd") {
                PolarizationTimeDelay td;
                char c = 'V';
                ls >> td.offset_ps >> c;
                td.delayed_pol = pol_from_char(c);
                a.elements.push_back(td);
            } else if (kind == "att") {
                Attenuator at;
                ls >> at.transmission;
                a.elements.push_back(at);
            } else if (kind == "phase") {
                PhaseCorrector pc;
                double p;
                while (ls >> p) pc.phases_rad.push_back(p);
                a.elements.push_back(pc);
            } else {
                throw Error(ErrorCode::config_error,
                            "unknown element kind '" + kind + "'");
            }
        } else {
            throw Error(ErrorCode::config_error,
                        "unknown apparatus line tag '" + tag + "'");
        }
    }
    if (!header || !grid_seen)
        throw Error(ErrorCode::config_error, "not an apparatus description");
    a.grid.validate();
    for (const auto& e : a.elements) validate_element(e, a.grid);
    return a;
}

// ---------------------------------------------------------------------------
// Output artifacts

struct Provenance {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

inline void stamp(json& j, const Provenance& p) {
    j["schema_version"] = kSchemaVersion;
    j["config_hash"] = detail::hash_hex(p.config_hash);
    j["seed"] = p.seed;
}

inline std::string counts_to_csv(const ExperimentCounts& counts,
                                 const Provenance& prov) {
    std::ostringstream out;
    out << "# schema_version=" << kSchemaVersion
        << " config_hash=" << detail::hash_hex(prov.config_hash)
        << " seed=" << prov.seed << "\n";
    out << "alpha,beta,prepared,outcome,count\n";
    for (const auto& [pair, cm] : counts)
        for (int i = 0; i < cm.dimension; ++i)
            for (int j = 0; j <= cm.dimension; ++j) {
                out << pair.alpha << "," << pair.beta << "," << i << ",";
                if (j == cm.dimension)
                    out << "none";
                else
                    out << j;
                out << "," << cm.counts[static_cast<std::size_t>(i)]
                                       [static_cast<std::size_t>(j)]
                    << "\n";
            }
    return out.str();
}

inline json counts_to_json(const CountMatrix& cm, const BasisPair& pair,
                           const Provenance& prov) {
    json j;
    stamp(j, prov);
    j["alpha"] = pair.alpha;
    j["beta"] = pair.beta;
    j["dimension"] = cm.dimension;
    j["shots"] = cm.shots;
    j["counts"] = cm.counts;
    j["columns"] = "outcomes 0..d-1 then the no-window bucket";
    return j;
}

inline json probabilities_to_json(const std::vector<std::vector<double>>& p,
                                  int alpha, int beta, const Provenance& prov) {
    json j;
    stamp(j, prov);
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["probabilities"] = p;
    return j;
}

inline json report_to_json(const KeyRateReport& r, const Provenance& prov) {
    json j;
    stamp(j, prov);
    j["dimension"] = r.dimension;
    j["fidelities"] = {{"computational", r.fidelities_computational},
                       {"superposition", r.fidelities_superposition}};
    j["qber"] = r.qber;
    j["secret_key_rate_bits"] = r.rate_bits;
    j["qber_threshold"] = r.threshold_qber;
    return j;
}

inline json error_to_json(const Error& e, const std::string& context) {
    return json{{"code", e.code_name()}, {"message", e.what()},
                {"context", context}};
}

// Diagnostic dump of the oracle's mode basis and matrix.
inline json chain_matrix_to_json(const oracle::ChainMatrix& m) {
    json j;
    j["schema_version"] = kSchemaVersion;
    auto basis_json = [](const oracle::ModeBasis& b) {
        json arr = json::array();
        for (const auto& mode : b)
            arr.push_back({{"fine", mode.fine_bin},
                           {"coarse_ps", mode.coarse_ps},
                           {"pol", std::string(1, pol_char(mode.pol))}});
        return arr;
    };
    j["inputs"] = basis_json(m.inputs);
    j["outputs"] = basis_json(m.outputs);
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c)
            row.push_back({m.at(r, c).real(), m.at(r, c).imag()});
        rows.push_back(std::move(row));
    }
    j["matrix"] = std::move(rows);
    return j;
}

}  // namespace tbq
