#include "maclab/plot.hpp"

#include "maclab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace maclab {

namespace {

constexpr double kPanel = 300.0;
constexpr double kMargin = 45.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_text(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

std::string escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string bit_string(std::uint32_t label, int width)
{
    std::string out(static_cast<std::size_t>(width), '0');
    for (int j = 0; j < width; ++j)
        if ((label >> (width - 1 - j)) & 1u)
            out[static_cast<std::size_t>(j)] = '1';
    return out;
}

/// "Nice" tick step covering span with about five ticks.
double tick_step(double span)
{
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag)
            return m * mag;
    return 10.0 * mag;
}

class Svg {
public:
    Svg(double width, double height) : width_(width), height_(height) {}

    void text(double x, double y, std::string_view s, int size = 12, std::string_view anchor = "middle",
              std::string_view extra = "")
    {
        body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
                 "\" text-anchor=\"" + std::string(anchor) + "\"" + std::string(extra) + ">" + escape(s) + "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0,
              std::string_view dash = "")
    {
        body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
                 "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"" +
                 (dash.empty() ? "" : " stroke-dasharray=\"" + std::string(dash) + "\"") + "/>\n";
    }
    void circle(double x, double y, double r, std::string_view fill)
    {
        body_ += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) + "\" fill=\"" +
                 std::string(fill) + "\"/>\n";
    }
    void rect(double x, double y, double w, double h, std::string_view stroke)
    {
        body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
                 "\" fill=\"none\" stroke=\"" + std::string(stroke) + "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke)
    {
        std::string coords;
        for (const auto& [x, y] : pts)
            coords += num(x) + "," + num(y) + " ";
        body_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1.5\" points=\"" +
                 coords + "\"/>\n";
    }

    std::string str() const
    {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
               num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
               "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ +
               "</svg>\n";
    }

private:
    double width_, height_;
    std::string body_;
};

/// Square panel with symmetric limits [-lim, lim] on both axes.
void scatter_panel(Svg& svg, double x0, double y0, std::string_view title, std::span<const ComplexPoint> pts,
                   int label_bits, std::string_view color)
{
    double lim = 0.0;
    for (const auto& p : pts)
        lim = std::max({lim, std::abs(p.real()), std::abs(p.imag())});
    lim = lim > 0.0 ? lim * 1.2 : 1.0;
    auto sx = [&](double v) { return x0 + (v + lim) / (2 * lim) * kPanel; };
    auto sy = [&](double v) { return y0 + (lim - v) / (2 * lim) * kPanel; };

    svg.rect(x0, y0, kPanel, kPanel, "#444");
    const double step = tick_step(2 * lim);
    for (double t = std::ceil(-lim / step) * step; t <= lim + 1e-12; t += step) {
        const double v = std::abs(t) < 1e-12 ? 0.0 : t;
        svg.line(sx(v), y0, sx(v), y0 + kPanel, "#e0e0e0", 0.5);
        svg.line(x0, sy(v), x0 + kPanel, sy(v), "#e0e0e0", 0.5);
        svg.text(sx(v), y0 + kPanel + 14, tick_text(v), 10);
        svg.text(x0 - 4, sy(v) + 3, tick_text(v), 10, "end");
    }
    svg.line(sx(0), y0, sx(0), y0 + kPanel, "#888", 0.8);
    svg.line(x0, sy(0), x0 + kPanel, sy(0), "#888", 0.8);
    svg.text(x0 + kPanel / 2, y0 - 8, title, 13);
    svg.text(x0 + kPanel / 2, y0 + kPanel + 30, "In-phase", 11);
    svg.text(x0 - 32, y0 + kPanel / 2, "Quadrature", 11, "middle",
             " transform=\"rotate(-90 " + num(x0 - 32) + " " + num(y0 + kPanel / 2) + ")\"");

    const bool labels = pts.size() <= kMaxLabeledPoints;
    for (std::size_t l = 0; l < pts.size(); ++l) {
        svg.circle(sx(pts[l].real()), sy(pts[l].imag()), 3.5, color);
        if (labels)
            svg.text(sx(pts[l].real()) + 5, sy(pts[l].imag()) - 5, bit_string(static_cast<std::uint32_t>(l), label_bits),
                     9, "start");
    }
}

}  // namespace

std::string plot_constellations_svg(const ConstellationFile& file, std::string_view title)
{
    const SumConstellation sum = superimpose(file.scenario, file.users);
    if (sum.size() > kMaxPlotPoints)
        throw Error(ErrorCode::InvalidArgument, "constellation plot is limited to 4096 sum points");
    const std::size_t panels = file.users.size() + 1;
    Svg svg(panels * (kPanel + 2 * kMargin), kPanel + 2 * kMargin + 30);
    svg.text(panels * (kPanel + 2 * kMargin) / 2, 18, title, 15);
    for (std::size_t i = 0; i < file.users.size(); ++i)
        scatter_panel(svg, kMargin + i * (kPanel + 2 * kMargin), kMargin + 20, "User " + std::to_string(i + 1),
                      file.users[i].points(), file.users[i].bits(), kPalette[i % 10]);
    scatter_panel(svg, kMargin + file.users.size() * (kPanel + 2 * kMargin), kMargin + 20, "Sum constellation",
                  sum.points, file.scenario.total_bits(), "#000");
    return svg.str();
}

std::string plot_curves_svg(std::span<const CurveSeries> series, std::string_view x_label, std::string_view y_label,
                            bool log_y, std::string_view title)
{
    std::size_t total = 0;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw Error(ErrorCode::ShapeMismatch, "series '" + s.label + "' has mismatched x/y lengths");
        total += s.x.size();
        for (std::size_t j = 0; j < s.x.size(); ++j) {
            if (log_y && !(s.y[j] > 0.0))
                continue;
            xmin = std::min(xmin, s.x[j]);
            xmax = std::max(xmax, s.x[j]);
            const double y = log_y ? std::log10(s.y[j]) : s.y[j];
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (total > kMaxPlotPoints)
        throw Error(ErrorCode::InvalidArgument, "curve plot is limited to 4096 points");
    if (!std::isfinite(xmin)) {
        xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    }
    if (xmax - xmin < 1e-12)
        xmin -= 1.0, xmax += 1.0;
    if (log_y) {
        ymin = std::floor(ymin);
        ymax = std::max(std::ceil(ymax), ymin + 1.0);
    } else {
        const double pad = std::max(0.05 * (ymax - ymin), 1e-3);
        ymin -= pad;
        ymax += pad;
    }

    const double w = 560, h = 380, left = 70, top = 40;
    Svg svg(left + w + 180, top + h + 60);
    auto sx = [&](double v) { return left + (v - xmin) / (xmax - xmin) * w; };
    auto sy = [&](double v) { return top + (ymax - v) / (ymax - ymin) * h; };
    svg.text(left + w / 2, 22, title, 15);
    svg.rect(left, top, w, h, "#444");

    const double xstep = tick_step(xmax - xmin);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9; t += xstep) {
        svg.line(sx(t), top, sx(t), top + h, "#e0e0e0", 0.5);
        svg.text(sx(t), top + h + 16, tick_text(std::abs(t) < 1e-12 ? 0.0 : t), 11);
    }
    if (log_y) {
        for (double d = ymin; d <= ymax + 1e-9; d += 1.0) {
            svg.line(left, sy(d), left + w, sy(d), "#e0e0e0", 0.5);
            svg.text(left - 6, sy(d) + 4, "1e" + std::to_string(static_cast<int>(d)), 11, "end");
        }
    } else {
        const double ystep = tick_step(ymax - ymin);
        for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9; t += ystep) {
            svg.line(left, sy(t), left + w, sy(t), "#e0e0e0", 0.5);
            svg.text(left - 6, sy(t) + 4, tick_text(std::abs(t) < 1e-12 ? 0.0 : t), 11, "end");
        }
    }
    svg.text(left + w / 2, top + h + 40, x_label, 12);
    svg.text(left - 50, top + h / 2, y_label, 12, "middle",
             " transform=\"rotate(-90 " + num(left - 50) + " " + num(top + h / 2) + ")\"");

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % 10];
        std::vector<std::pair<double, double>> pts;
        for (std::size_t j = 0; j < s.x.size(); ++j) {
            if (log_y && !(s.y[j] > 0.0))
                continue;
            pts.emplace_back(sx(s.x[j]), sy(log_y ? std::log10(s.y[j]) : s.y[j]));
        }
        svg.polyline(pts, color);
        for (const auto& [x, y] : pts)
            svg.circle(x, y, 2.5, color);
        const double ly = top + 10 + 18 * static_cast<double>(k);
        svg.line(left + w + 15, ly, left + w + 40, ly, color, 2.0);
        svg.text(left + w + 46, ly + 4, s.label, 11, "start");
    }
    return svg.str();
}

}  // namespace maclab
