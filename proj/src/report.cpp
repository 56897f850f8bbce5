#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "wtv/errors.hpp"
#include "wtv/harness.hpp"
#include "wtv/serialization.hpp"

namespace wtv {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_row(const SweepRow& a, const SweepRow& b) {
    return same(a.h, b.h) && same(a.A, b.A) && same(a.rho_p, b.rho_p) && same(a.tv, b.tv) && same(a.rhs1, b.rhs1) &&
           same(a.rhs2, b.rhs2) && same(a.psup, b.psup) && same(a.prhs, b.prhs) && a.ok1 == b.ok1 &&
           a.ok2 == b.ok2 && a.okp == b.okp && a.lemma2_branch == b.lemma2_branch && a.entropic == b.entropic &&
           a.error == b.error;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) detail::fail_precondition("cannot open '" + path.string() + "' for writing");
    out << content;
    out.close();
    if (!out) detail::fail_precondition("failed while writing '" + path.string() + "'");
}

}  // namespace

bool operator==(const SweepReport& a, const SweepReport& b) {
    if (a.scenario != b.scenario || a.params.p != b.params.p || a.params.q != b.params.q ||
        a.params.epsilon != b.params.epsilon || a.params.d != b.params.d || a.fit != b.fit || a.seed != b.seed ||
        a.grid_n != b.grid_n || a.version != b.version || a.rows.size() != b.rows.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        if (!same_row(a.rows[i], b.rows[i])) return false;
    }
    return true;
}

std::vector<ReportFormat> parse_formats(const std::string& list) {
    std::vector<ReportFormat> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "csv") out.push_back(ReportFormat::Csv);
        else if (item == "json") out.push_back(ReportFormat::Json);
        else if (item == "svg") out.push_back(ReportFormat::Svg);
        else if (!item.empty()) detail::fail_precondition("unknown report format '" + item + "'");
    }
    return out;
}

std::string report_csv(const SweepReport& report) {
    std::string out = "h,A,rho_p,tv,rhs1,rhs2,psup,prhs,ok1,ok2,okp\n";
    for (const auto& r : report.rows) {
        out += num(r.h) + ',' + num(r.A) + ',' + num(r.rho_p) + ',' + num(r.tv) + ',' + num(r.rhs1) + ',' +
               num(r.rhs2) + ',' + num(r.psup) + ',' + num(r.prhs) + ',' + (r.ok1 ? '1' : '0') + ',' +
               (r.ok2 ? '1' : '0') + ',' + (r.okp ? '1' : '0') + '\n';
    }
    return out;
}

std::string report_svg(const SweepReport& report) {
    constexpr double W = 640, H = 480, margin = 60;
    struct Series {
        const char* name;
        const char* color;
        double SweepRow::*field;
    };
    const Series series[] = {{"measured", "#1f77b4", &SweepRow::rho_p},
                             {"lemma1", "#d62728", &SweepRow::rhs1},
                             {"lemma2", "#2ca02c", &SweepRow::rhs2}};

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto usable = [](const SweepRow& r, double v) { return !r.failed() && r.A > 0.0 && v > 0.0 && std::isfinite(v); };
    for (const auto& r : report.rows) {
        for (const auto& s : series) {
            const double v = r.*(s.field);
            if (!usable(r, v)) continue;
            x0 = std::min(x0, std::log10(r.A));
            x1 = std::max(x1, std::log10(r.A));
            y0 = std::min(y0, std::log10(v));
            y1 = std::max(y1, std::log10(v));
        }
    }
    if (!(x0 < x1)) {
        x0 = std::isfinite(x0) ? x0 - 1.0 : -1.0;
        x1 = x0 + 2.0;
    }
    if (!(y0 < y1)) {
        y0 = std::isfinite(y0) ? y0 - 1.0 : -1.0;
        y1 = y0 + 2.0;
    }
    auto px = [&](double lx) { return margin + (lx - x0) / (x1 - x0) * (W - 2 * margin); };
    auto py = [&](double ly) { return H - margin - (ly - y0) / (y1 - y0) * (H - 2 * margin); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
    out += "<title>" + report.scenario + ": log10 rho_p and certificate bounds vs log10 W_q</title>\n";
    out += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out += "<line x1=\"60\" y1=\"420\" x2=\"580\" y2=\"420\" stroke=\"black\"/>\n";
    out += "<line x1=\"60\" y1=\"60\" x2=\"60\" y2=\"420\" stroke=\"black\"/>\n";
    out += "<text x=\"320\" y=\"460\" text-anchor=\"middle\">log10 A (" + fixed(x0) + " .. " + fixed(x1) + ")</text>\n";
    out += "<text x=\"20\" y=\"240\" transform=\"rotate(-90 20 240)\" text-anchor=\"middle\">log10 value (" +
           fixed(y0) + " .. " + fixed(y1) + ")</text>\n";
    double legend_y = 30;
    for (const auto& s : series) {
        std::string pts;
        for (const auto& r : report.rows) {
            const double v = r.*(s.field);
            if (!usable(r, v)) continue;
            if (!pts.empty()) pts += ' ';
            pts += fixed(px(std::log10(r.A))) + ',' + fixed(py(std::log10(v)));
        }
        out += "<polyline class=\"" + std::string(s.name) + "\" fill=\"none\" stroke=\"" + s.color +
               "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        out += "<text x=\"480\" y=\"" + fixed(legend_y) + "\" fill=\"" + s.color + "\">" + s.name + "</text>\n";
        legend_y += 16;
    }
    out += "</svg>\n";
    return out;
}

std::vector<std::filesystem::path> emit_report(const SweepReport& report, const std::filesystem::path& dir,
                                               const std::vector<ReportFormat>& formats) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) detail::fail_precondition("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::vector<std::filesystem::path> written;
    for (auto f : formats) {
        std::filesystem::path path = dir / report.scenario;
        switch (f) {
            case ReportFormat::Csv:
                path += ".csv";
                write_file(path, report_csv(report));
                break;
            case ReportFormat::Json:
                path += ".json";
                write_file(path, to_json(report).dump(2) + "\n");
                break;
            case ReportFormat::Svg:
                path += ".svg";
                write_file(path, report_svg(report));
                break;
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace wtv
