#include "sicert/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "sicert/errors.h"

namespace sicert {

void RunConfig::validate() const {
    TmdConfig{modes, outcomes, cutoff}.validate();
    if (cutoff < 1) {
        throw InvalidParameter("cutoff must be at least 1");
    }
    if (mu_count < 1) {
        throw InvalidParameter("mu_count must be at least 1");
    }
    if (!(mu_start >= 0.0) || !(mu_stop >= mu_start) || !std::isfinite(mu_stop)) {
        throw InvalidParameter(fmt::format("bad mean-photon range [{}, {}]", mu_start, mu_stop));
    }
    if (mu_spacing == GridSpacing::log && !(mu_start > 0.0)) {
        throw InvalidParameter("log spacing needs a positive mu_start");
    }
    if (tail_mode == TailMode::refined && probe_horizon < cutoff) {
        throw InvalidParameter("probe_horizon must be at least the cutoff");
    }
    if (!(source_tail_tolerance > 0.0) || !(gap_alarm > 0.0)) {
        throw InvalidParameter("tolerances must be positive");
    }
    if (threads < 0) {
        throw InvalidParameter("threads must be nonnegative");
    }
}

std::vector<double> RunConfig::grid() const {
    std::vector<double> out(mu_count);
    if (mu_count == 1) {
        out[0] = mu_start;
        return out;
    }
    for (int i = 0; i < mu_count; i++) {
        double t = static_cast<double>(i) / (mu_count - 1);
        if (mu_spacing == GridSpacing::linear) {
            out[i] = mu_start + t * (mu_stop - mu_start);
        } else {
            out[i] = std::exp(std::log(mu_start) + t * (std::log(mu_stop) - std::log(mu_start)));
        }
    }
    out.back() = mu_stop;
    return out;
}

int evaluation_horizon(double mu) {
    return static_cast<int>(std::ceil(mu + 40.0 * std::sqrt(mu) + 40.0));
}

PhaseInsensitivePOVM sweep_povm(const RunConfig &cfg) {
    cfg.validate();
    int horizon = 0;
    for (double mu : cfg.grid()) {
        horizon = std::max(horizon, evaluation_horizon(mu));
    }
    return build_tmd_povm(TmdConfig{cfg.modes, cfg.outcomes, std::max(cfg.cutoff, horizon + 1)});
}

PointSetup prepare_point(const RunConfig &cfg, const PhaseInsensitivePOVM &povm, double mu) {
    PhotonSource source = coherent_source(mu);
    PointSetup setup;
    setup.stats = expected_outcome_probabilities(source, povm, evaluation_horizon(mu),
                                                 cfg.source_tail_tolerance);
    setup.ctx = make_truncation_context(povm, mu, cfg.cutoff, cfg.tail_mode, cfg.probe_horizon);
    return setup;
}

const char *SweepRecord::status_name() const {
    if (setup_failed) {
        return "error";
    }
    return certification_status_name(status);
}

bool SweepReport::all_verified() const {
    return std::all_of(records.begin(), records.end(), [](const SweepRecord &r) { return r.verified(); });
}

double SweepReport::max_min_entropy() const {
    double best = 0.0;
    for (const auto &r : records) {
        if (r.verified()) {
            best = std::max(best, r.result->min_entropy_bits);
        }
    }
    return best;
}

namespace {

SweepRecord run_point(const RunConfig &cfg, const PhaseInsensitivePOVM &povm, int index, double mu) {
    SweepRecord rec;
    rec.index = index;
    rec.mean_photon = mu;
    try {
        PointSetup setup = prepare_point(cfg, povm, mu);
        rec.weight_bound = setup.ctx.weight_bound;
        rec.source_residual = setup.stats.truncation_residual;
        CertifyOptions options;
        options.gap_alarm = cfg.gap_alarm;
        CertificationOutcome outcome = certify(setup.ctx, setup.stats, options);
        rec.status = outcome.status;
        rec.gap_alarm = outcome.gap_alarm;
        rec.message = outcome.message;
        if (outcome.status == CertificationStatus::verified) {
            rec.result = outcome.result;
            rec.certificate = outcome.certificate;
        }
    } catch (const std::exception &e) {
        rec.setup_failed = true;
        rec.message = e.what();
    }
    return rec;
}

std::string number(double v) {
    if (!std::isfinite(v)) {
        return "";
    }
    return fmt::format("{:.12g}", v);
}

}  // namespace

SweepReport run_sweep(const RunConfig &cfg) {
    const PhaseInsensitivePOVM povm = sweep_povm(cfg);
    const std::vector<double> grid = cfg.grid();

    SweepReport report;
    report.config = cfg;
    report.records.resize(grid.size());
    int workers = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, static_cast<int>(grid.size()));

    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < static_cast<int>(grid.size()); i = next++) {
            report.records[i] = run_point(cfg, povm, i, grid[i]);
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < workers; w++) {
            pool.emplace_back(work);
        }
        work();
    }
    return report;
}

void emit_csv(const SweepReport &report, std::ostream &out) {
    const RunConfig &cfg = report.config;
    out << kCsvHeader << '\n';
    for (const auto &r : report.records) {
        out << number(r.mean_photon) << ',' << cfg.cutoff << ',' << cfg.outcomes << ',' << cfg.modes
            << ',' << tail_mode_name(cfg.tail_mode) << ',';
        if (r.verified()) {
            out << number(r.result->guessing_bound) << ',' << number(r.result->min_entropy_bits) << ','
                << number(r.result->duality_gap) << ',' << number(r.weight_bound) << ',';
        } else {
            out << ",,,,";
        }
        out << r.status_name() << '\n';
    }
}

void write_csv(const SweepReport &report, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(fmt::format("cannot open '{}' for writing", path));
    }
    emit_csv(report, out);
    out.flush();
    if (!out) {
        throw IoError(fmt::format("failed while writing '{}'", path));
    }
}

namespace {

void write_values(std::ostream &out, const char *key, const std::vector<double> &values) {
    out << key;
    for (double v : values) {
        out << ' ' << fmt::format("{:.17g}", v);
    }
    out << '\n';
}

std::vector<double> parse_values(const std::string &rest) {
    std::istringstream in(rest);
    std::vector<double> out;
    std::string token;
    while (in >> token) {
        try {
            size_t used = 0;
            out.push_back(std::stod(token, &used));
            if (used != token.size()) {
                throw InvalidParameter("");
            }
        } catch (const std::exception &) {
            throw InvalidParameter(fmt::format("'{}' is not a number", token));
        }
    }
    return out;
}

// Reads "key rest-of-line" records, skipping blanks and '#' comments.
std::map<std::string, std::string> read_records(std::istream &in) {
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') {
            continue;
        }
        auto split = line.find_first_of(" \t", start);
        std::string key = line.substr(start, split - start);
        std::string rest = split == std::string::npos ? "" : line.substr(split + 1);
        while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' ')) {
            rest.pop_back();
        }
        out[key] = rest;
    }
    return out;
}

const std::string &require(const std::map<std::string, std::string> &records, const std::string &key) {
    auto it = records.find(key);
    if (it == records.end()) {
        throw InvalidParameter(fmt::format("certificate record is missing '{}'", key));
    }
    return it->second;
}

double single_value(const std::map<std::string, std::string> &records, const std::string &key) {
    auto values = parse_values(require(records, key));
    if (values.size() != 1) {
        throw InvalidParameter(fmt::format("'{}' must hold exactly one value", key));
    }
    return values[0];
}

}  // namespace

void write_certificate(std::ostream &out, const CertificateDump &dump) {
    out << "# dual certificate: lambda (lower brackets), eta (upper brackets), xi (normalization)\n";
    out << "index " << dump.index << '\n';
    out << "mean_photon " << fmt::format("{:.17g}", dump.mean_photon) << '\n';
    out << "cutoff " << dump.cutoff << '\n';
    out << "outcomes " << dump.outcomes << '\n';
    out << "modes " << dump.modes << '\n';
    out << "tail_mode " << tail_mode_name(dump.tail_mode) << '\n';
    write_values(out, "lambda", dump.certificate.lambda);
    write_values(out, "eta", dump.certificate.eta);
    out << "xi " << fmt::format("{:.17g}", dump.certificate.xi) << '\n';
    out << "margin " << fmt::format("{:.17g}", dump.certificate.feasibility_margin) << '\n';
    out << "objective " << fmt::format("{:.17g}", dump.certificate.objective_value) << '\n';
}

CertificateDump read_certificate(std::istream &in) {
    auto records = read_records(in);
    CertificateDump dump;
    dump.index = static_cast<int>(single_value(records, "index"));
    dump.mean_photon = single_value(records, "mean_photon");
    dump.cutoff = static_cast<int>(single_value(records, "cutoff"));
    dump.outcomes = static_cast<int>(single_value(records, "outcomes"));
    dump.modes = static_cast<int>(single_value(records, "modes"));
    dump.tail_mode = parse_tail_mode(require(records, "tail_mode"));
    dump.certificate.lambda = parse_values(require(records, "lambda"));
    dump.certificate.eta = parse_values(require(records, "eta"));
    dump.certificate.xi = single_value(records, "xi");
    dump.certificate.feasibility_margin = single_value(records, "margin");
    dump.certificate.objective_value = single_value(records, "objective");
    if (static_cast<int>(dump.certificate.lambda.size()) != dump.outcomes ||
        static_cast<int>(dump.certificate.eta.size()) != dump.outcomes) {
        throw InvalidParameter("certificate multiplier count does not match 'outcomes'");
    }
    return dump;
}

void dump_certificates(const SweepReport &report, const std::string &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError(fmt::format("cannot create directory '{}': {}", dir, ec.message()));
    }
    for (const auto &r : report.records) {
        if (!r.verified()) {
            continue;
        }
        CertificateDump dump{r.index, r.mean_photon, report.config.cutoff, report.config.outcomes,
                             report.config.modes, report.config.tail_mode, *r.certificate};
        auto path = std::filesystem::path(dir) / fmt::format("certificate_{}.txt", r.index);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
        }
        write_certificate(out, dump);
        if (!out) {
            throw IoError(fmt::format("failed while writing '{}'", path.string()));
        }
    }
}

void write_povm(std::ostream &out, const PhaseInsensitivePOVM &povm) {
    out << "# phase-insensitive POVM: stored diagonal entries per element\n";
    out << "outcomes " << povm.size() << '\n';
    for (int j = 0; j < povm.size(); j++) {
        const auto &e = povm[j];
        out << "element " << j << " tail " << tail_kind_name(e.tail_kind()) << " stored " << e.n_store()
            << '\n';
        for (int n = 0; n < e.n_store(); n++) {
            out << (n == 0 ? "" : " ") << fmt::format("{:.17g}", e.stored()[n]);
        }
        out << '\n';
    }
}

PhaseInsensitivePOVM read_povm(std::istream &in) {
    std::string line;
    while (std::getline(in, line)) {
        auto start = line.find_first_not_of(" \t\r");
        if (start != std::string::npos && line[start] != '#') {
            break;
        }
        line.clear();
    }
    std::istringstream first(line);
    std::string word;
    int m = 0;
    if (!(first >> word >> m) || word != "outcomes") {
        throw InvalidParameter("POVM file must start with 'outcomes <m>'");
    }
    std::vector<FockDiagonalOperator> elements;
    for (int j = 0; j < m; j++) {
        int index = 0;
        int stored = 0;
        std::string element_word, tail_word, kind, stored_word;
        if (!(in >> element_word >> index >> tail_word >> kind >> stored_word >> stored) ||
            element_word != "element" || index != j || tail_word != "tail" || stored_word != "stored" ||
            stored < 0) {
            throw InvalidParameter(fmt::format("malformed header for POVM element {}", j));
        }
        std::vector<double> diag(stored);
        for (double &v : diag) {
            if (!(in >> v)) {
                throw InvalidParameter(fmt::format("POVM element {} has too few entries", j));
            }
        }
        TailDescriptor tail = ConservativeUnitTail{};
        if (kind == "zero") {
            tail = ZeroTail{};
        } else if (kind != "explicit" && kind != "conservative_unit") {
            throw InvalidParameter(fmt::format("unknown tail kind '{}'", kind));
        }
        elements.emplace_back(std::move(diag), std::move(tail));
    }
    return PhaseInsensitivePOVM(std::move(elements));
}

}  // namespace sicert
