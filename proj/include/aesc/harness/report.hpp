#pragma once

// Figures from results.csv: SVG line charts and reconstruction mosaics.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aesc/harness/experiment.hpp"
#include "aesc/image_io.hpp"

namespace aesc::harness {

inline double parse_number(const std::string& s, const std::string& what) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw FormatError(what + ": '" + s + "' is not a number");
    return v;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw DataError("cannot read " + p.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(f, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

inline std::vector<ResultRow> parse_results(const std::vector<std::string>& lines, const std::string& what = "results.csv") {
    if (lines.empty()) throw FormatError(what + " is empty");
    if (lines.front() != kResultColumns) throw FormatError(what + ": unexpected header");
    if (lines.size() == 1) throw FormatError(what + " has no rows");
    std::vector<ResultRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        const std::string where = what + ":" + std::to_string(i + 1);
        if (f.size() != 14) throw FormatError(where + ": expected 14 fields, got " + std::to_string(f.size()));
        ResultRow r;
        r.dataset = f[0];
        r.z_dims = static_cast<std::size_t>(parse_number(f[1], where));
        r.compression_ratio = parse_number(f[2], where);
        r.channel = f[3];
        r.snr_db = parse_number(f[4], where);
        r.scheme = f[5];
        parse_scheme(r.scheme);
        double* dst[] = {&r.psnr, &r.ssim, &r.rr_ratio, &r.ss_index, &r.outage_rate, &r.pre_ber, &r.post_ber, &r.bits_per_image};
        for (std::size_t k = 0; k < 8; ++k) *dst[k] = parse_number(f[6 + k], where);
        rows.push_back(r);
    }
    return rows;
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points; // sorted by x
};

struct Chart {
    std::string title, x_label, y_label;
    std::vector<Series> series;
};

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

// Self-contained SVG line chart. Infinite y values are drawn on the top edge.
inline std::string render_svg(const Chart& c) {
    constexpr double W = 720, H = 440, L = 70, R = 180, T = 40, B = 60;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    bool has_inf = false;
    for (const auto& s : c.series)
        for (auto [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            if (std::isinf(y)) {
                has_inf = true;
                continue;
            }
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!std::isfinite(y0)) y0 = 0, y1 = 1;
    if (has_inf) y1 += std::max(1.0, 0.1 * (y1 - y0));
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return std::isinf(y) ? T : T + (1.0 - (y - y0) / (y1 - y0)) * (H - T - B); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << svg_num(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(c.title) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
        o << "<line x1=\"" << svg_num(px(xv)) << "\" y1=\"" << H - B << "\" x2=\"" << svg_num(px(xv)) << "\" y2=\"" << H - B + 5
          << "\" stroke=\"black\"/><text x=\"" << svg_num(px(xv)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
          << format_number(std::round(xv * 100) / 100) << "</text>\n";
        o << "<line x1=\"" << L - 5 << "\" y1=\"" << svg_num(py(yv)) << "\" x2=\"" << L << "\" y2=\"" << svg_num(py(yv))
          << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << svg_num(py(yv) + 4) << "\" text-anchor=\"end\">"
          << format_number(std::round(yv * 1000) / 1000) << "</text>\n";
    }
    if (has_inf)
        o << "<text x=\"" << L - 8 << "\" y=\"" << T - 4 << "\" text-anchor=\"end\">inf</text>\n";
    o << "<text x=\"" << svg_num(L + (W - L - R) / 2) << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
      << xml_escape(c.x_label) << "</text>\n";
    o << "<text x=\"18\" y=\"" << svg_num(T + (H - T - B) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << svg_num(T + (H - T - B) / 2) << ")\">" << xml_escape(c.y_label) << "</text>\n";
    for (std::size_t k = 0; k < c.series.size(); ++k) {
        const auto& s = c.series[k];
        const char* col = palette[k % 8];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.points.size(); ++i)
            o << (i ? " " : "") << svg_num(px(s.points[i].first)) << "," << svg_num(py(s.points[i].second));
        o << "\"/>\n";
        for (auto [x, y] : s.points)
            o << "<circle cx=\"" << svg_num(px(x)) << "\" cy=\"" << svg_num(py(y)) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
        const double ly = T + 10 + 20.0 * double(k);
        o << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 40 << "\" y2=\"" << ly << "\" stroke=\""
          << col << "\" stroke-width=\"2\"/><text x=\"" << W - R + 46 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.label)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

struct Metric {
    const char* key;
    const char* label;
    double ResultRow::*field;
};

inline const std::vector<Metric>& report_metrics() {
    static const std::vector<Metric> m{{"psnr", "PSNR (dB)", &ResultRow::psnr},
                                       {"ssim", "SSIM", &ResultRow::ssim},
                                       {"rr_ratio", "Recognition rate ratio", &ResultRow::rr_ratio},
                                       {"ss_index", "Semantic service index", &ResultRow::ss_index},
                                       {"outage_rate", "Outage rate", &ResultRow::outage_rate},
                                       {"post_ber", "Post-decoding BER", &ResultRow::post_ber}};
    return m;
}

inline std::string series_label(const ResultRow& r) {
    return r.scheme == "aesc_i" ? "aesc_i z=" + std::to_string(r.z_dims) : r.scheme;
}

// One chart per metric against SNR, one polyline per scheme (and z for aesc_i).
inline std::map<std::string, std::string> snr_charts(const std::vector<ResultRow>& rows) {
    std::map<std::string, std::string> files;
    for (const auto& m : report_metrics()) {
        Chart c{std::string(m.label) + " vs SNR (" + rows.front().dataset + ", " + rows.front().channel + ")", "SNR (dB)",
                m.label, {}};
        std::vector<std::string> order;
        std::map<std::string, Series> by;
        for (const auto& r : rows) {
            const auto label = series_label(r);
            if (!by.count(label)) order.push_back(label), by[label].label = label;
            by[label].points.emplace_back(r.snr_db, r.*m.field);
        }
        for (const auto& l : order) {
            std::sort(by[l].points.begin(), by[l].points.end());
            c.series.push_back(by[l]);
        }
        files[std::string(m.key) + "_vs_snr.svg"] = render_svg(c);
    }
    return files;
}

// One chart per metric against compression ratio, one polyline per SNR
// (aesc_i rows only; produced when more than one z_dims was run).
inline std::map<std::string, std::string> cr_charts(const std::vector<ResultRow>& rows) {
    std::map<std::string, std::string> files;
    std::set<std::size_t> zs;
    for (const auto& r : rows)
        if (r.scheme == "aesc_i") zs.insert(r.z_dims);
    if (zs.size() < 2) return files;
    for (const auto& m : report_metrics()) {
        Chart c{std::string(m.label) + " vs compression ratio (aesc_i)", "Compression ratio", m.label, {}};
        std::map<double, Series> by;
        for (const auto& r : rows) {
            if (r.scheme != "aesc_i") continue;
            by[r.snr_db].label = "SNR " + format_number(r.snr_db) + " dB";
            by[r.snr_db].points.emplace_back(r.compression_ratio, r.*m.field);
        }
        for (auto& [snr, s] : by) {
            std::sort(s.points.begin(), s.points.end());
            c.series.push_back(s);
        }
        files[std::string(m.key) + "_vs_cr.svg"] = render_svg(c);
    }
    return files;
}

struct SampleEntry {
    std::string scheme;
    std::size_t z_dims = 0;
    double snr_db = 0;
    std::size_t index = 0;
    std::string file;
};

inline std::vector<SampleEntry> parse_samples(const std::vector<std::string>& lines, const std::string& what) {
    if (lines.empty() || lines.front() != "scheme,z_dims,snr_db,index,file") throw FormatError(what + ": unexpected header");
    std::vector<SampleEntry> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        const std::string where = what + ":" + std::to_string(i + 1);
        if (f.size() != 5) throw FormatError(where + ": expected 5 fields");
        out.push_back({f[0], static_cast<std::size_t>(parse_number(f[1], where)), parse_number(f[2], where),
                       static_cast<std::size_t>(parse_number(f[3], where)), f[4]});
    }
    return out;
}

// Tiles images into a grid with a gray gutter; empty cells stay black.
inline Tensor tile(const std::vector<std::vector<std::optional<Tensor>>>& cells, const Shape& shape) {
    constexpr std::size_t gap = 2;
    const std::size_t rows = cells.size(), cols = cells.front().size();
    const std::size_t C = shape[0], h = shape[1], w = shape[2];
    Tensor out({C, rows * h + (rows + 1) * gap, cols * w + (cols + 1) * gap}, 0.5f);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t ch = 0; ch < C; ++ch)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t x = 0; x < w; ++x)
                        out.at(ch, gap + r * (h + gap) + y, gap + c * (w + gap) + x) =
                            cells[r][c] ? cells[r][c]->at(ch, y, x) : 0.0f;
    return out;
}

// Mosaic per (z, sample index): rows original | aesc_i | direct | codec,
// columns the SNR points in ascending order (the original sits in column 0).
inline std::map<std::string, Tensor> sample_mosaics(const std::vector<SampleEntry>& entries, const std::filesystem::path& dir) {
    std::map<std::string, Tensor> out;
    std::map<std::string, Tensor> cache;
    auto load = [&](const std::string& f) -> const Tensor& {
        auto it = cache.find(f);
        if (it == cache.end()) it = cache.emplace(f, image::read_pnm(dir / f)).first;
        return it->second;
    };
    std::set<double> snrs;
    std::set<std::size_t> zs, indices;
    for (const auto& e : entries) {
        if (e.scheme != "original") snrs.insert(e.snr_db);
        if (e.scheme == "aesc_i") zs.insert(e.z_dims);
        if (e.scheme == "original") indices.insert(e.index);
    }
    if (snrs.empty() || indices.empty()) return out;
    const std::vector<double> cols(snrs.begin(), snrs.end());
    if (zs.empty()) zs.insert(0);
    for (std::size_t z : zs)
        for (std::size_t idx : indices) {
            std::vector<std::vector<std::optional<Tensor>>> grid;
            Shape shape;
            std::vector<std::optional<Tensor>> orig_row(cols.size());
            for (const auto& e : entries)
                if (e.scheme == "original" && e.index == idx) orig_row[0] = load(e.file), shape = orig_row[0]->shape();
            grid.push_back(orig_row);
            for (const char* scheme : {"aesc_i", "direct", "external_codec"}) {
                std::vector<std::optional<Tensor>> row(cols.size());
                bool any = false;
                for (const auto& e : entries) {
                    if (e.scheme != scheme || e.index != idx || (e.scheme == std::string("aesc_i") && e.z_dims != z)) continue;
                    const auto pos = std::lower_bound(cols.begin(), cols.end(), e.snr_db) - cols.begin();
                    row[static_cast<std::size_t>(pos)] = load(e.file);
                    any = true;
                }
                if (any) grid.push_back(row);
            }
            if (shape.empty()) continue;
            const std::string ext = shape[0] == 1 ? ".pgm" : ".ppm";
            out["mosaic_z" + std::to_string(z) + "_" + std::to_string(idx) + ext] = tile(grid, shape);
        }
    return out;
}

struct ReportFiles {
    std::vector<std::filesystem::path> written;
};

// Reads results.csv (and samples.csv next to it, if present), builds every
// figure in memory, then writes them to out_dir. Nothing is written when the
// inputs are malformed.
inline ReportFiles make_report(const std::filesystem::path& results_csv_path, const std::filesystem::path& out_dir) {
    const auto rows = parse_results(read_lines(results_csv_path), results_csv_path.string());
    std::map<std::string, std::string> text_files = snr_charts(rows);
    for (auto& [k, v] : cr_charts(rows)) text_files[k] = v;
    std::map<std::string, Tensor> images;
    const auto samples_csv = results_csv_path.parent_path() / "samples.csv";
    if (std::filesystem::exists(samples_csv))
        images = sample_mosaics(parse_samples(read_lines(samples_csv), samples_csv.string()),
                                results_csv_path.parent_path() / "samples");

    ReportFiles rf;
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, text] : text_files) {
        write_text(out_dir / name, text);
        rf.written.push_back(out_dir / name);
    }
    for (const auto& [name, img] : images) {
        image::write_pnm(out_dir / name, img);
        rf.written.push_back(out_dir / name);
    }
    return rf;
}

} // namespace aesc::harness
