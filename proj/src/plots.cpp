#include "poregrad/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "poregrad/artifacts.hpp"
#include "poregrad/error.hpp"

namespace poregrad {

namespace {

std::string num(double v)
{
    if (!std::isfinite(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 20, kTop = 30, kBottom = 60;

/// Minimal fixed-size SVG canvas with a linear or log2 x axis.
class Chart {
public:
    Chart(std::string title, double x0, double x1, double y0, double y1, bool log_x = false)
        : log_x_(log_x), x0_(tx(x0)), x1_(tx(x1)), y0_(y0), y1_(y1)
    {
        if (x1_ == x0_)
            x1_ = x0_ + 1;
        if (y1_ == y0_)
            y1_ = y0_ + 1;
        body_ << "<text x=\"" << num(kWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title
              << "</text>\n";
    }

    double px(double x) const { return kLeft + (tx(x) - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom); }

    void axes(const std::vector<double>& xticks, const std::vector<double>& yticks, const std::string& xlabel,
              const std::string& ylabel, double xmin, double xmax)
    {
        const double base = kHeight - kBottom;
        body_ << "<g class=\"x-axis\" data-min=\"" << num(xmin) << "\" data-max=\"" << num(xmax) << "\">\n";
        body_ << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(base) << "\" x2=\"" << num(kWidth - kRight)
              << "\" y2=\"" << num(base) << "\" stroke=\"black\"/>\n";
        for (double t : xticks)
            body_ << "<text class=\"tick\" x=\"" << num(px(t)) << "\" y=\"" << num(base + 16)
                  << "\" text-anchor=\"middle\" font-size=\"11\">" << num(t) << "</text>\n";
        body_ << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 16)
              << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n</g>\n";
        body_ << "<g class=\"y-axis\">\n<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
              << num(kLeft) << "\" y2=\"" << num(base) << "\" stroke=\"black\"/>\n";
        for (double t : yticks)
            body_ << "<text class=\"tick\" x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(t) + 4)
                  << "\" text-anchor=\"end\" font-size=\"11\">" << num(t) << "</text>\n";
        body_ << "<text x=\"16\" y=\"" << num((kTop + base) / 2) << "\" transform=\"rotate(-90 16 "
              << num((kTop + base) / 2) << ")\" text-anchor=\"middle\" font-size=\"12\">" << ylabel
              << "</text>\n</g>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, bool markers)
    {
        if (pts.empty())
            return;
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts)
            body_ << num(px(x)) << ',' << num(py(y)) << ' ';
        body_ << "\"/>\n";
        if (markers)
            for (const auto& [x, y] : pts)
                body_ << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2.5\" fill=\""
                      << color << "\"/>\n";
    }

    void raw(const std::string& s) { body_ << s; }

    std::string str() const
    {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
            << num(kHeight) << "\" font-family=\"sans-serif\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

private:
    double tx(double x) const { return log_x_ ? std::log2(x) : x; }

    bool log_x_;
    double x0_, x1_, y0_, y1_;
    std::ostringstream body_;
};

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::vector<double> linear_ticks(double lo, double hi, int n)
{
    std::vector<double> t;
    for (int i = 0; i <= n; ++i)
        t.push_back(lo + (hi - lo) * i / n);
    return t;
}

std::string color_ramp(double v)
{
    // white -> dark blue
    v = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255 - v * (255 - 8)));
    const int g = static_cast<int>(std::lround(255 - v * (255 - 48)));
    const int b = static_cast<int>(std::lround(255 - v * (255 - 107)));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

struct Writer {
    fs::path out_dir;
    std::string stem;
    std::vector<fs::path>& written;

    void operator()(const std::string& suffix, const std::string& content)
    {
        const auto path = out_dir / (stem + suffix);
        write_file(path, content);
        written.push_back(path);
    }
};

void plot_roc(const nlohmann::json& roc, const std::string& model, Writer& w)
{
    const auto rows = roc_rows(roc.at("fpr").get<std::vector<double>>(), roc.at("tpr").get<std::vector<double>>());
    std::ostringstream csv;
    csv << "fpr,tpr\n";
    for (const auto& [f, t] : rows)
        csv << num(f) << ',' << num(t) << '\n';
    w("_roc.csv", csv.str());
    Chart chart("ROC " + model + " (AUC " + num(roc.at("auc").get<double>()) + ")", 0, 1, 0, 1);
    chart.axes(linear_ticks(0, 1, 5), linear_ticks(0, 1, 5), "false positive rate", "true positive rate", 0, 1);
    chart.polyline({{0, 0}, {1, 1}}, "#bbbbbb", false);
    chart.polyline(rows, kPalette[0], false);
    w("_roc.svg", chart.str());
}

void table_csv(const std::vector<nlohmann::json>& reports, Writer& w)
{
    std::vector<MetricsReport> rows;
    for (const auto& r : reports)
        rows.push_back(report_from_json(r));
    w("_table.csv", reports_to_csv(rows));
}

void plot_surface(const nlohmann::json& j, Writer& w)
{
    std::vector<double> sigmas, offsets;
    struct Cell {
        double s, o, f;
        bool degenerate;
    };
    std::vector<Cell> cells;
    for (const auto& c : j.at("surface")) {
        cells.push_back({c.at("sigma").get<double>(), c.at("t_offset").get<double>(), c.at("f1").get<double>(),
                         c.value("degenerate", false)});
        sigmas.push_back(cells.back().s);
        offsets.push_back(cells.back().o);
    }
    for (auto* v : {&sigmas, &offsets}) {
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    std::ostringstream csv;
    csv << "sigma,t_offset,f1,degenerate\n";
    for (const auto& c : cells)
        csv << num(c.s) << ',' << num(c.o) << ',' << num(c.f) << ',' << (c.degenerate ? 1 : 0) << '\n';
    w("_f1_surface.csv", csv.str());

    const double n_s = static_cast<double>(std::max<std::size_t>(sigmas.size(), 1));
    const double n_o = static_cast<double>(std::max<std::size_t>(offsets.size(), 1));
    Chart chart("local threshold F1 over (sigma, t_offset)", 0, n_s, 0, n_o);
    std::ostringstream cellsvg, labels;
    for (std::size_t i = 0; i < sigmas.size(); ++i)
        labels << "<text class=\"tick\" x=\"" << num(chart.px(i + 0.5)) << "\" y=\"" << num(kHeight - kBottom + 16)
               << "\" text-anchor=\"middle\" font-size=\"11\">" << num(sigmas[i]) << "</text>\n";
    for (std::size_t k = 0; k < offsets.size(); ++k)
        labels << "<text class=\"tick\" x=\"" << num(kLeft - 6) << "\" y=\"" << num(chart.py(k + 0.5) + 4)
               << "\" text-anchor=\"end\" font-size=\"11\">" << num(offsets[k]) << "</text>\n";
    for (const auto& c : cells) {
        const double i = static_cast<double>(std::lower_bound(sigmas.begin(), sigmas.end(), c.s) - sigmas.begin());
        const double k = static_cast<double>(std::lower_bound(offsets.begin(), offsets.end(), c.o) - offsets.begin());
        const double x = chart.px(i), y = chart.py(k + 1);
        const double cw = chart.px(i + 1) - x, ch = chart.py(k) - y;
        cellsvg << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw) << "\" height=\""
                << num(ch) << "\" fill=\"" << color_ramp(c.f) << "\"/>\n"
                << "<text x=\"" << num(x + cw / 2) << "\" y=\"" << num(y + ch / 2 + 4)
                << "\" text-anchor=\"middle\" font-size=\"9\" fill=\"" << (c.f > 0.6 ? "white" : "black") << "\">"
                << num(std::round(c.f * 1000) / 1000) << "</text>\n";
    }
    chart.raw(cellsvg.str());
    chart.axes({}, {}, "sigma (px)", "t_offset", sigmas.empty() ? 0 : sigmas.front(),
               sigmas.empty() ? 0 : sigmas.back());
    chart.raw(labels.str());
    w("_f1_surface.svg", chart.str());
}

void plot_series(const std::vector<std::pair<double, double>>& pts, const std::string& title,
                 const std::string& xname, const std::string& yname, const std::string& suffix, Writer& w)
{
    std::ostringstream csv;
    csv << xname << ',' << yname << '\n';
    for (const auto& [x, y] : pts)
        csv << num(x) << ',' << num(y) << '\n';
    w(suffix + ".csv", csv.str());
    double x0 = 0, x1 = 1;
    if (!pts.empty()) {
        x0 = pts.front().first;
        x1 = pts.back().first;
    }
    std::vector<double> xt;
    for (const auto& p : pts)
        xt.push_back(p.first);
    Chart chart(title, x0, x1, 0, 1);
    chart.axes(xt, linear_ticks(0, 1, 5), xname, yname, x0, x1);
    chart.polyline(pts, kPalette[0], true);
    w(suffix + ".svg", chart.str());
}

void plot_radii(const nlohmann::json& j, Writer& w)
{
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (const auto& [name, values] : j.at("radii_um").items())
        series.emplace_back(name, values.get<std::vector<double>>());
    std::ostringstream csv;
    csv << "series,radius_um\n";
    double lo = 0, hi = 1;
    bool any = false;
    for (const auto& [name, values] : series)
        for (double v : values) {
            csv << name << ',' << num(v) << '\n';
            lo = any ? std::min(lo, v) : v;
            hi = any ? std::max(hi, v) : v;
            any = true;
        }
    w("_radii.csv", csv.str());

    if (hi <= lo)
        hi = lo + 1;
    const double n = static_cast<double>(std::max<std::size_t>(series.size(), 1));
    Chart chart("equivalent pore radius", 0, n, lo, hi);
    std::ostringstream shapes, labels;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& v = series[s].second;
        labels << "<text class=\"tick\" x=\"" << num(chart.px(s + 0.5)) << "\" y=\"" << num(kHeight - kBottom + 16)
               << "\" text-anchor=\"middle\" font-size=\"11\">" << series[s].first << "</text>\n";
        if (v.size() < 2)
            continue;
        double mean = 0, var = 0;
        for (double x : v)
            mean += x;
        mean /= static_cast<double>(v.size());
        for (double x : v)
            var += (x - mean) * (x - mean);
        const double sd = std::sqrt(var / static_cast<double>(v.size() - 1));
        // Silverman's rule of thumb
        const double h = std::max(1.06 * sd * std::pow(static_cast<double>(v.size()), -0.2), 1e-3 * (hi - lo));
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        constexpr int kSteps = 64;
        std::vector<std::pair<double, double>> density;
        double peak = 0;
        for (int i = 0; i <= kSteps; ++i) {
            const double y = *mn + (*mx - *mn) * i / kSteps;
            double d = 0;
            for (double x : v)
                d += std::exp(-0.5 * ((y - x) / h) * ((y - x) / h));
            density.emplace_back(y, d);
            peak = std::max(peak, d);
        }
        shapes << "<polygon fill=\"" << kPalette[s % 6] << "\" fill-opacity=\"0.5\" stroke=\"" << kPalette[s % 6]
               << "\" points=\"";
        for (const auto& [y, d] : density)
            shapes << num(chart.px(s + 0.5 + 0.4 * d / peak)) << ',' << num(chart.py(y)) << ' ';
        for (auto it = density.rbegin(); it != density.rend(); ++it)
            shapes << num(chart.px(s + 0.5 - 0.4 * it->second / peak)) << ',' << num(chart.py(it->first)) << ' ';
        shapes << "\"/>\n";
    }
    chart.raw(shapes.str());
    chart.axes({}, linear_ticks(lo, hi, 5), "", "radius (um)", 0, n);
    chart.raw(labels.str());
    w("_radii.svg", chart.str());
}

void plot_timing(const fs::path& path, Writer& w)
{
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("n,wall_seconds,per_particle", 0) != 0)
        throw DataError("malformed bench table " + path.string() + ": expected header n,wall_seconds,per_particle");
    struct Row {
        double n, wall, per;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        Row r{};
        char c1 = 0, c2 = 0;
        std::istringstream ss(line);
        if (!(ss >> r.n >> c1 >> r.wall >> c2 >> r.per) || c1 != ',' || c2 != ',' || !(r.n >= 1))
            throw DataError("malformed bench table " + path.string() + ": bad row '" + line + "'");
        rows.push_back(r);
    }
    if (rows.empty())
        throw DataError("malformed bench table " + path.string() + ": no rows");
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.n < b.n; });

    std::ostringstream csv;
    csv << "n,wall_seconds,per_particle\n";
    double ymax = 0;
    std::vector<double> xt;
    std::vector<std::pair<double, double>> wall, per;
    for (const auto& r : rows) {
        csv << num(r.n) << ',' << num(r.wall) << ',' << num(r.per) << '\n';
        ymax = std::max({ymax, r.wall, r.per});
        xt.push_back(r.n);
        wall.emplace_back(r.n, r.wall);
        per.emplace_back(r.n, r.per);
    }
    w("_timing.csv", csv.str());
    if (ymax <= 0)
        ymax = 1;
    const double x0 = rows.front().n, x1 = rows.back().n;
    Chart chart("computation time", x0, x1, 0, ymax * 1.05, x1 > x0);
    chart.axes(xt, linear_ticks(0, ymax * 1.05, 5), "particles n", "seconds", x0, x1);
    chart.polyline(wall, kPalette[0], true);
    chart.polyline(per, kPalette[1], true);
    w("_timing.svg", chart.str());
}

}  // namespace

std::vector<std::pair<double, double>> roc_rows(const std::vector<double>& fpr, const std::vector<double>& tpr)
{
    if (fpr.size() != tpr.size())
        throw DataError("roc: fpr and tpr lengths differ");
    std::vector<std::pair<double, double>> rows;
    if (fpr.empty() || fpr.front() != 0.0 || tpr.front() != 0.0)
        rows.emplace_back(0.0, 0.0);
    for (std::size_t i = 0; i < fpr.size(); ++i)
        rows.emplace_back(fpr[i], tpr[i]);
    if (rows.back() != std::pair<double, double>{1.0, 1.0})
        rows.emplace_back(1.0, 1.0);
    return rows;
}

std::vector<fs::path> emit_plots(const std::vector<fs::path>& reports, const fs::path& out_dir)
{
    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    for (const auto& path : reports) {
        if (!fs::exists(path))
            throw IoError("report not found: " + path.string());
        Writer w{out_dir, path.stem().string(), written};
        if (path.extension() == ".csv") {
            plot_timing(path, w);
            continue;
        }
        const auto j = read_json(path);
        try {
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "metrics_report") {
                table_csv({j}, w);
                if (j.contains("roc"))
                    plot_roc(j.at("roc"), j.at("model").get<std::string>(), w);
            } else if (kind == "metrics_set") {
                table_csv(j.at("reports").get<std::vector<nlohmann::json>>(), w);
            } else if (kind == "local_gridsearch") {
                plot_surface(j, w);
            } else if (kind == "attadj_calibration") {
                std::vector<std::pair<double, double>> pts;
                for (const auto& c : j.at("curve"))
                    pts.emplace_back(c.at("threshold").get<double>(), c.at("f1").get<double>());
                plot_series(pts, "att-adjusted calibration", "residual_threshold", "f1", "_calibration", w);
            } else if (kind == "iteration_trace") {
                std::vector<std::pair<double, double>> pts;
                const auto f = j.at("f1").get<std::vector<double>>();
                for (std::size_t i = 0; i < f.size(); ++i)
                    pts.emplace_back(static_cast<double>(i + 1), f[i]);
                plot_series(pts, "att-adjusted F1 per iteration", "iteration", "f1", "_iterations", w);
            } else if (kind == "pore_radii") {
                plot_radii(j, w);
            } else {
                throw DataError("unrecognised report kind '" + kind + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed report " + path.string() + ": " + e.what());
        } catch (const DataError& e) {
            const std::string msg = e.what();
            if (msg.find(path.string()) != std::string::npos)
                throw;
            throw DataError("malformed report " + path.string() + ": " + msg);
        }
    }
    return written;
}

}  // namespace poregrad
