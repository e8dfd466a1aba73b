#include "wipe/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wipe {

double contact_percentage(const EpisodeLog& log, double threshold)
{
    if (!(threshold > 0.0))
        throw std::invalid_argument("contact_percentage: threshold must be positive");
    const int planned = std::max(log.planned_steps, static_cast<int>(log.steps.size()));
    if (planned == 0)
        throw std::invalid_argument("contact_percentage: empty log");
    int pressing = 0;
    for (const auto& s : log.steps)
        pressing += s.ft[2] < -threshold;
    return 100.0 * pressing / planned;
}

double mean_fz(const EpisodeLog& log)
{
    if (log.steps.empty())
        return 0.0;
    double sum = 0.0;
    for (const auto& s : log.steps)
        sum += s.ft[2];
    return sum / static_cast<double>(log.steps.size());
}

double std_fz(const EpisodeLog& log)
{
    if (log.steps.empty())
        return 0.0;
    const double m = mean_fz(log);
    double ss = 0.0;
    for (const auto& s : log.steps)
        ss += (s.ft[2] - m) * (s.ft[2] - m);
    return std::sqrt(ss / static_cast<double>(log.steps.size()));
}

std::optional<double> force_ratio(const EpisodeLog& log, double reference_avg_fz)
{
    if (reference_avg_fz == 0.0)
        throw std::invalid_argument("force_ratio: zero reference force");
    if (log.steps.empty())
        return std::nullopt;
    const double m = mean_fz(log);
    if (m >= 0.0)
        return std::nullopt;
    return 100.0 * m / reference_avg_fz;
}

ScenarioResult score_episode(const EpisodeLog& log, double reference_avg_fz, double threshold)
{
    ScenarioResult r;
    r.sponge = log.sponge;
    r.height = log.profile;
    r.controller = log.controller;
    r.contact_pct = contact_percentage(log, threshold);
    r.avg_fz = mean_fz(log);
    r.std_fz = std_fz(log);
    r.ratio_pct = force_ratio(log, reference_avg_fz);
    r.aborted = log.aborted;
    return r;
}

ReferenceTable build_reference_table(const std::vector<SpongeDemos>& per_sponge, double threshold)
{
    ReferenceTable table;
    for (const auto& sd : per_sponge) {
        if (sd.demos.empty())
            throw std::invalid_argument("build_reference_table: no demonstrations for " + sd.sponge.name);
        std::vector<double> fz;
        for (const auto& d : sd.demos)
            for (Eigen::Index t = 0; t < d.raw_ft.rows(); ++t)
                fz.push_back(d.raw_ft(t, 2));
        ReferenceEntry e;
        e.sponge = sd.sponge.name;
        double sum = 0.0;
        int pressing = 0;
        for (double v : fz) {
            sum += v;
            pressing += v < -threshold;
        }
        e.avg_fz = sum / static_cast<double>(fz.size());
        double ss = 0.0;
        for (double v : fz)
            ss += (v - e.avg_fz) * (v - e.avg_fz);
        e.std_fz = std::sqrt(ss / static_cast<double>(fz.size()));
        e.contact_pct = 100.0 * pressing / static_cast<double>(fz.size());
        table.push_back(e);
    }
    return table;
}

const ReferenceEntry& reference_for(const ReferenceTable& table, const std::string& sponge)
{
    for (const auto& e : table)
        if (e.sponge == sponge)
            return e;
    throw std::invalid_argument("reference table has no entry for sponge " + sponge);
}

const ScenarioResult& ReportBundle::cell(const std::string& sponge, const std::string& height,
                                         const std::string& controller) const
{
    for (const auto& c : cells)
        if (c.sponge == sponge && c.height == height && c.controller == controller)
            return c;
    throw std::out_of_range("no cell " + sponge + "/" + height + "/" + controller);
}

const Aggregate& ReportBundle::aggregate(const std::string& controller, const std::string& height) const
{
    for (const auto& a : aggregates)
        if (a.controller == controller && a.height == height)
            return a;
    throw std::out_of_range("no aggregate " + controller + "/" + height);
}

std::vector<Aggregate> aggregate_cells(const std::vector<ScenarioResult>& cells)
{
    std::vector<std::string> controllers;
    std::vector<std::string> heights;
    for (const auto& c : cells) {
        if (std::find(controllers.begin(), controllers.end(), c.controller) == controllers.end())
            controllers.push_back(c.controller);
        if (std::find(heights.begin(), heights.end(), c.height) == heights.end())
            heights.push_back(c.height);
    }
    std::vector<Aggregate> out;
    auto add = [&](const std::string& ctl, const std::string& label, auto&& keep) {
        Aggregate a;
        a.controller = ctl;
        a.height = label;
        for (const auto& c : cells)
            if (c.controller == ctl && keep(c)) {
                a.contact_pct += c.contact_pct;
                a.ratio_pct += c.ratio_pct.value_or(0.0);
                ++a.cells;
            }
        if (a.cells == 0)
            return;
        a.contact_pct /= a.cells;
        a.ratio_pct /= a.cells;
        out.push_back(a);
    };
    const auto& table = table_heights();
    for (const auto& ctl : controllers) {
        for (const auto& h : heights)
            add(ctl, h, [&](const ScenarioResult& c) { return c.height == h; });
        add(ctl, "all", [&](const ScenarioResult& c) {
            return std::find(table.begin(), table.end(), c.height) != table.end();
        });
    }
    return out;
}

namespace {

nlohmann::json ratio_json(const std::optional<double>& r) { return r ? nlohmann::json(*r) : nlohmann::json(nullptr); }

std::optional<double> ratio_from(const nlohmann::json& j)
{
    if (j.is_null())
        return std::nullopt;
    return j.get<double>();
}

} // namespace

nlohmann::json to_json(const ReportBundle& b)
{
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : b.cells)
        cells.push_back({{"sponge", c.sponge},
                         {"height", c.height},
                         {"controller", c.controller},
                         {"contact_pct", c.contact_pct},
                         {"avg_fz", c.avg_fz},
                         {"std_fz", c.std_fz},
                         {"ratio_pct", ratio_json(c.ratio_pct)},
                         {"aborted", c.aborted}});
    nlohmann::json aggs = nlohmann::json::array();
    for (const auto& a : b.aggregates)
        aggs.push_back({{"controller", a.controller},
                        {"height", a.height},
                        {"contact_pct", a.contact_pct},
                        {"ratio_pct", a.ratio_pct},
                        {"cells", a.cells}});
    nlohmann::json ref = nlohmann::json::array();
    for (const auto& r : b.reference)
        ref.push_back({{"sponge", r.sponge}, {"contact_pct", r.contact_pct}, {"avg_fz", r.avg_fz}, {"std_fz", r.std_fz}});
    return {{"cells", cells}, {"aggregates", aggs}, {"reference", ref}, {"plots", b.plots}, {"config", b.config}};
}

ReportBundle bundle_from_json(const nlohmann::json& j)
{
    ReportBundle b;
    for (const auto& c : j.at("cells"))
        b.cells.push_back({c.at("sponge").get<std::string>(), c.at("height").get<std::string>(),
                           c.at("controller").get<std::string>(), c.at("contact_pct").get<double>(),
                           c.at("avg_fz").get<double>(), c.at("std_fz").get<double>(), ratio_from(c.at("ratio_pct")),
                           c.at("aborted").get<bool>()});
    for (const auto& a : j.at("aggregates"))
        b.aggregates.push_back({a.at("controller").get<std::string>(), a.at("height").get<std::string>(),
                                a.at("contact_pct").get<double>(), a.at("ratio_pct").get<double>(),
                                a.at("cells").get<int>()});
    for (const auto& r : j.at("reference"))
        b.reference.push_back({r.at("sponge").get<std::string>(), r.at("contact_pct").get<double>(),
                               r.at("avg_fz").get<double>(), r.at("std_fz").get<double>()});
    b.plots = j.at("plots");
    b.config = j.at("config");
    return b;
}

std::string results_csv(const ReportBundle& b)
{
    std::ostringstream s;
    s << "sponge,height,controller,contact_pct,avg_fz,std_fz,ratio_pct,aborted\n";
    for (const auto& c : b.cells)
        s << c.sponge << ',' << c.height << ',' << c.controller << ',' << format_double(c.contact_pct) << ','
          << format_double(c.avg_fz) << ',' << format_double(c.std_fz) << ','
          << (c.ratio_pct ? format_double(*c.ratio_pct) : std::string("n/a")) << ',' << (c.aborted ? 1 : 0) << '\n';
    return s.str();
}

std::vector<ScenarioResult> parse_results_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<ScenarioResult> out;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ','))
            f.push_back(tok);
        if (f.size() != 8)
            throw std::runtime_error("results.csv: expected 8 fields");
        ScenarioResult r;
        r.sponge = f[0];
        r.height = f[1];
        r.controller = f[2];
        r.contact_pct = std::stod(f[3]);
        r.avg_fz = std::stod(f[4]);
        r.std_fz = std::stod(f[5]);
        if (f[6] != "n/a")
            r.ratio_pct = std::stod(f[6]);
        r.aborted = f[7] == "1";
        out.push_back(r);
    }
    return out;
}

} // namespace wipe
