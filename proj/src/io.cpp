#include "bk/io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace bk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void take(const json& obj, const char* key, T& into)
{
    if (auto it = obj.find(key); it != obj.end()) {
        try {
            into = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config field '") + key + "': " + e.what());
        }
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where)
{
    if (!obj.is_object())
        throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || key == k;
        if (!ok)
            throw ConfigError("unknown config field '" + where + "." + key + "'");
    }
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, sep))
        out.push_back(cell);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

double parse_number(const std::string& text, const fs::path& path, std::size_t line)
{
    double v = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw IoError(path.string() + ":" + std::to_string(line) + ": not a number: '" + text + "'");
    return v;
}

} // namespace

RunConfig parse_config(const json& doc)
{
    RunConfig cfg;
    reject_unknown(doc, {"model", "integrator", "outputs", "sweep"}, "config");

    if (auto it = doc.find("model"); it != doc.end()) {
        const json& m = *it;
        reject_unknown(m, {"n_blocks", "mass", "coupling_stiffness", "plate_stiffness", "plate_velocity", "spacing", "friction"},
                       "model");
        long long n = cfg.model.n_blocks;
        take(m, "n_blocks", n);
        cfg.model.n_blocks = static_cast<Index>(n);
        take(m, "mass", cfg.model.mass);
        take(m, "coupling_stiffness", cfg.model.coupling_stiffness);
        take(m, "plate_stiffness", cfg.model.plate_stiffness);
        take(m, "plate_velocity", cfg.model.plate_velocity);
        take(m, "spacing", cfg.model.spacing);
        if (auto f = m.find("friction"); f != m.end()) {
            reject_unknown(*f, {"f0", "sigma", "alpha"}, "model.friction");
            take(*f, "f0", cfg.model.friction.f0);
            take(*f, "sigma", cfg.model.friction.sigma);
            take(*f, "alpha", cfg.model.friction.alpha);
        }
    }
    if (auto it = doc.find("integrator"); it != doc.end()) {
        const json& c = *it;
        reject_unknown(c, {"step_size", "t_end", "seed", "perturbation_amplitude", "warmup_cap", "skip_quiescent"},
                       "integrator");
        take(c, "step_size", cfg.integrator.step_size);
        take(c, "t_end", cfg.integrator.t_end);
        take(c, "seed", cfg.integrator.seed);
        take(c, "perturbation_amplitude", cfg.integrator.perturbation_amplitude);
        take(c, "warmup_cap", cfg.integrator.warmup_cap);
        take(c, "skip_quiescent", cfg.integrator.skip_quiescent);
    }
    if (auto it = doc.find("outputs"); it != doc.end()) {
        const json& o = *it;
        reject_unknown(o, {"catalog", "per_block_slip", "trajectory", "trajectory_stride", "distributions", "bin_width",
                           "fit_window"},
                       "outputs");
        take(o, "catalog", cfg.outputs.catalog);
        take(o, "per_block_slip", cfg.outputs.per_block_slip);
        take(o, "trajectory", cfg.outputs.trajectory);
        long long stride = static_cast<long long>(cfg.outputs.trajectory_stride);
        take(o, "trajectory_stride", stride);
        if (stride < 1)
            throw ValidationError("outputs.trajectory_stride must be at least 1");
        cfg.outputs.trajectory_stride = static_cast<std::size_t>(stride);
        take(o, "distributions", cfg.outputs.distributions);
        take(o, "bin_width", cfg.outputs.bin_width);
        if (auto w = o.find("fit_window"); w != o.end()) {
            if (!w->is_array() || w->size() != 2)
                throw ConfigError("outputs.fit_window must be a two-element array");
            cfg.outputs.fit_window = {(*w)[0].get<double>(), (*w)[1].get<double>()};
        }
    }
    if (auto it = doc.find("sweep"); it != doc.end()) {
        reject_unknown(*it, {"alpha"}, "sweep");
        take(*it, "alpha", cfg.sweep_alpha);
    }
    return cfg;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const RunConfig& cfg)
{
    const auto& m = cfg.model;
    const auto& c = cfg.integrator;
    const auto& o = cfg.outputs;
    json doc;
    doc["model"] = {{"n_blocks", m.n_blocks},
                    {"mass", m.mass},
                    {"coupling_stiffness", m.coupling_stiffness},
                    {"plate_stiffness", m.plate_stiffness},
                    {"plate_velocity", m.plate_velocity},
                    {"spacing", m.spacing},
                    {"friction", {{"f0", m.friction.f0}, {"sigma", m.friction.sigma}, {"alpha", m.friction.alpha}}}};
    doc["integrator"] = {{"step_size", c.step_size},
                         {"t_end", c.t_end},
                         {"seed", c.seed},
                         {"perturbation_amplitude", c.perturbation_amplitude},
                         {"warmup_cap", c.warmup_cap},
                         {"skip_quiescent", c.skip_quiescent}};
    doc["outputs"] = {{"catalog", o.catalog},
                      {"per_block_slip", o.per_block_slip},
                      {"trajectory", o.trajectory},
                      {"trajectory_stride", o.trajectory_stride},
                      {"distributions", o.distributions},
                      {"bin_width", o.bin_width},
                      {"fit_window", {o.fit_window.lo, o.fit_window.hi}}};
    if (!cfg.sweep_alpha.empty())
        doc["sweep"] = {{"alpha", cfg.sweep_alpha}};
    return doc;
}

std::vector<std::string> validate(const RunConfig& cfg)
{
    auto warnings = validate(cfg.model);
    validate(cfg.integrator);
    if (cfg.outputs.trajectory_stride < 1)
        throw ValidationError("outputs.trajectory_stride must be at least 1");
    if (!(cfg.outputs.bin_width > 0.0))
        throw ValidationError("outputs.bin_width must be positive");
    if (!(cfg.outputs.fit_window.lo < cfg.outputs.fit_window.hi))
        throw ValidationError("outputs.fit_window must be increasing");
    for (double a : cfg.sweep_alpha)
        if (!(a > 0.0))
            throw ValidationError("sweep alpha values must be positive");
    return warnings;
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string provenance_comment(const RunConfig& cfg)
{
    const auto& m = cfg.model;
    std::ostringstream os;
    os << "# " << tool_name << ' ' << tool_version << " n_blocks=" << m.n_blocks << " mass=" << format_double(m.mass)
       << " coupling_stiffness=" << format_double(m.coupling_stiffness)
       << " plate_stiffness=" << format_double(m.plate_stiffness)
       << " plate_velocity=" << format_double(m.plate_velocity) << " f0=" << format_double(m.friction.f0)
       << " sigma=" << format_double(m.friction.sigma) << " alpha=" << format_double(m.friction.alpha)
       << " step_size=" << format_double(cfg.integrator.step_size) << " t_end=" << format_double(cfg.integrator.t_end)
       << " perturbation_amplitude=" << format_double(cfg.integrator.perturbation_amplitude)
       << " seed=" << cfg.integrator.seed;
    return os.str();
}

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw IoError("CSV has no column '" + name + "'");
}

std::map<std::string, std::string> CsvTable::metadata() const
{
    std::map<std::string, std::string> out;
    for (const auto& line : comments) {
        std::istringstream is(line);
        std::string token;
        while (is >> token)
            if (auto eq = token.find('='); eq != std::string::npos)
                out[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return out;
}

CsvTable read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.front() == '#') {
            table.comments.push_back(line);
            continue;
        }
        auto cells = split(line, ',');
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(table.header.size()) + " columns");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells)
            row.push_back(parse_number(c, path, lineno));
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty())
        throw IoError("'" + path.string() + "' has no header row");
    return table;
}

CsvWriter::CsvWriter(const fs::path& path, const std::string& comment, const std::vector<std::string>& header)
    : path_(path), out_(path)
{
    if (!out_)
        throw IoError("cannot write '" + path.string() + "'");
    if (!comment.empty())
        out_ << comment << '\n';
    for (std::size_t i = 0; i < header.size(); ++i)
        out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values)
{
    bool first = true;
    for (double v : values) {
        out_ << (first ? "" : ",") << format_double(v);
        first = false;
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values)
{
    for (std::size_t i = 0; i < values.size(); ++i)
        out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
}

void CsvWriter::close()
{
    if (!out_.is_open())
        return;
    out_.close();
    if (!out_)
        throw IoError("failed writing '" + path_.string() + "'");
}

void write_catalog_csv(const fs::path& path, const EventCatalog& catalog, const std::string& comment)
{
    CsvWriter w(path, comment, {"start", "end", "M", "M1", "participating_blocks"});
    for (const auto& e : catalog.events)
        w.row({e.start_time, e.end_time, e.magnitude_log10, e.magnitude_ln, static_cast<double>(e.participating_blocks)});
    w.close();
}

EventCatalog read_catalog_csv(const fs::path& path)
{
    const CsvTable t = read_csv(path);
    const auto start = t.column("start");
    const auto end = t.column("end");
    const auto m = t.column("M");
    const auto m1 = t.column("M1");
    const auto blocks = t.column("participating_blocks");

    EventCatalog catalog;
    for (const auto& r : t.rows) {
        EventRecord e;
        e.start_time = r[start];
        e.end_time = r[end];
        e.magnitude_log10 = r[m];
        e.magnitude_ln = r[m1];
        e.participating_blocks = static_cast<Index>(r[blocks]);
        catalog.events.push_back(std::move(e));
    }
    const auto meta = t.metadata();
    if (auto it = meta.find("t_end"); it != meta.end())
        catalog.window_end = std::stod(it->second);
    return catalog;
}

json catalog_to_json(const EventCatalog& catalog, bool per_block_slip)
{
    json events = json::array();
    for (const auto& e : catalog.events) {
        json item = {{"start", e.start_time},
                     {"end", e.end_time},
                     {"M", e.magnitude_log10},
                     {"M1", e.magnitude_ln},
                     {"participating_blocks", e.participating_blocks}};
        if (per_block_slip)
            item["slip"] = std::vector<double>(e.per_block_slip.data(), e.per_block_slip.data() + e.per_block_slip.size());
        events.push_back(std::move(item));
    }
    return {{"window", {catalog.window_start, catalog.window_end}},
            {"total_events", catalog.total_events()},
            {"discarded_open", catalog.discarded_open},
            {"discarded_empty", catalog.discarded_empty},
            {"events", std::move(events)}};
}

EventCatalog catalog_from_json(const json& doc)
{
    EventCatalog catalog;
    try {
        const auto& window = doc.at("window");
        catalog.window_start = window.at(0).get<double>();
        catalog.window_end = window.at(1).get<double>();
        catalog.discarded_open = doc.value("discarded_open", std::size_t{0});
        catalog.discarded_empty = doc.value("discarded_empty", std::size_t{0});
        for (const auto& item : doc.at("events")) {
            EventRecord e;
            e.start_time = item.at("start").get<double>();
            e.end_time = item.at("end").get<double>();
            e.magnitude_log10 = item.at("M").get<double>();
            e.magnitude_ln = item.at("M1").get<double>();
            e.participating_blocks = item.at("participating_blocks").get<Index>();
            if (auto s = item.find("slip"); s != item.end()) {
                const auto slip = s->get<std::vector<double>>();
                e.per_block_slip = Eigen::Map<const Eigen::VectorXd>(slip.data(), static_cast<Index>(slip.size()));
            }
            catalog.events.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed catalog JSON: ") + e.what());
    }
    return catalog;
}

void write_json(const fs::path& path, const json& doc)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

void write_catalog_json(const fs::path& path, const EventCatalog& catalog, const json& meta, bool per_block_slip)
{
    json doc = catalog_to_json(catalog, per_block_slip);
    doc["meta"] = meta;
    write_json(path, doc);
}

EventCatalog read_catalog_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return catalog_from_json(doc);
}

EventCatalog read_catalog(const fs::path& path)
{
    return path.extension() == ".json" ? read_catalog_json(path) : read_catalog_csv(path);
}

void write_cumulative_csv(const fs::path& path, const MagnitudeDistribution& dist, const std::string& comment)
{
    const bool natural = dist.log_base == LogBase::natural;
    CsvWriter w(path, comment, {natural ? "M1" : "M", "log10_P"});
    for (const auto& pt : cumulative_curve(dist))
        w.row({pt.magnitude, pt.value});
    w.close();
}

void write_rate_csv(const fs::path& path, const MagnitudeDistribution& dist, const std::string& comment)
{
    const bool natural = dist.log_base == LogBase::natural;
    std::string meta = comment;
    meta += (meta.empty() ? "#" : "") + std::string(" bin_width=") + format_double(dist.bin_width) +
            " total=" + std::to_string(dist.total) + " log_base=" + (natural ? "natural" : "ten");
    CsvWriter w(path, meta, {"bin", natural ? "M1" : "M", "count", "R", natural ? "ln_R" : "log10_R"});
    const auto points = rate_distribution(dist);
    std::size_t p = 0;
    for (std::size_t k = 0; k < dist.bins(); ++k) {
        if (dist.counts[k] == 0)
            continue;
        const auto& pt = points[p++];
        w.row({static_cast<double>(dist.first_bin + static_cast<long>(k)), pt.magnitude,
               static_cast<double>(dist.counts[k]), pt.rate, pt.log_rate});
    }
    w.close();
}

MagnitudeDistribution read_rate_csv(const fs::path& path)
{
    const CsvTable t = read_csv(path);
    const auto meta = t.metadata();
    auto need = [&](const char* key) {
        auto it = meta.find(key);
        if (it == meta.end())
            throw IoError("'" + path.string() + "' lacks '" + key + "' metadata");
        return it->second;
    };
    MagnitudeDistribution d;
    d.bin_width = std::stod(need("bin_width"));
    d.total = std::stoul(need("total"));
    d.log_base = need("log_base") == "natural" ? LogBase::natural : LogBase::ten;
    if (t.rows.empty())
        throw IoError("'" + path.string() + "' has no bins");

    const auto bin = t.column("bin");
    const auto count = t.column("count");
    d.first_bin = static_cast<long>(t.rows.front()[bin]);
    const long last = static_cast<long>(t.rows.back()[bin]);
    d.counts.assign(static_cast<std::size_t>(last - d.first_bin + 1), 0);
    for (const auto& r : t.rows)
        d.counts[static_cast<std::size_t>(static_cast<long>(r[bin]) - d.first_bin)] = static_cast<std::size_t>(r[count]);
    return d;
}

json fit_to_json(const GrFit& fit)
{
    return {{"B", fit.slope_B},
            {"b", fit.b_value},
            {"intercept", fit.intercept},
            {"window", {fit.window.lo, fit.window.hi}},
            {"residual_rms", fit.residual_rms},
            {"points", fit.points}};
}

void write_scaling_levels_csv(const fs::path& path, const ScalingReport& report, const std::string& comment)
{
    CsvWriter w(path, comment, {"level", "N", "mass", "coupling_stiffness", "plate_stiffness", "f0", "events"});
    for (std::size_t k = 0; k < report.levels.size(); ++k) {
        const auto& p = report.levels[k].params;
        const double events = k < report.catalogs.size() ? static_cast<double>(report.catalogs[k].total_events()) : 0.0;
        w.row({static_cast<double>(report.levels[k].n), static_cast<double>(p.n_blocks), p.mass, p.coupling_stiffness,
               p.plate_stiffness, p.friction.f0, events});
    }
    w.close();
}

void write_distance_csv(const fs::path& path, const std::vector<DistanceRow>& rows, const std::string& comment)
{
    CsvWriter w(path, comment, {"from", "to", "euclidean", "max"});
    for (const auto& r : rows)
        w.row({static_cast<double>(r.from), static_cast<double>(r.to), r.euclidean, r.max});
    w.close();
}

namespace {

std::vector<std::string> trajectory_header(Index n)
{
    std::vector<std::string> h{"time", "center_of_mass", "any_slipping"};
    for (Index i = 0; i < n; ++i)
        h.push_back("x" + std::to_string(i + 1));
    for (Index i = 0; i < n; ++i)
        h.push_back("v" + std::to_string(i + 1));
    return h;
}

} // namespace

TrajectoryWriter::TrajectoryWriter(const fs::path& path, const std::string& comment, Index n_blocks, std::size_t stride)
    : writer_(path, comment, trajectory_header(n_blocks)), stride_(stride == 0 ? 1 : stride)
{
    buffer_.resize(static_cast<std::size_t>(3 + 2 * n_blocks));
}

void TrajectoryWriter::on_step(const TrajectorySample<double>& sample)
{
    if (++count_ % stride_ != 0)
        return;
    const auto n = sample.positions.size();
    buffer_[0] = sample.time;
    buffer_[1] = center_of_mass(sample.positions);
    buffer_[2] = sample.any_slipping ? 1.0 : 0.0;
    for (Index i = 0; i < n; ++i) {
        buffer_[static_cast<std::size_t>(3 + i)] = sample.positions(i);
        buffer_[static_cast<std::size_t>(3 + n + i)] = sample.velocities(i);
    }
    writer_.row(buffer_);
}

} // namespace bk
