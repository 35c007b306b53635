#include "ist/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace ist::io {
namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw InputError("line " + std::to_string(line) + ": " + what);
}

bool parse_double(const std::string& tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T>
OmegaFile read_body(std::istream& in, int d, bool complex_field, int line_no) {
    OmegaTensor<T> t(d);
    std::vector<char> seen(t.stored_count(), 0);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = split_ws(line);
        if (toks.empty()) continue;
        const std::size_t want = complex_field ? 5 : 4;
        if (toks.size() != want)
            fail(line_no, "expected " + std::to_string(want) + " fields, got " +
                              std::to_string(toks.size()));
        int idx[3];
        for (int a = 0; a < 3; ++a) {
            double v;
            if (!parse_double(toks[a], v) || v != std::floor(v) || v < 0)
                fail(line_no, "bad label '" + toks[a] + "'");
            idx[a] = static_cast<int>(v);
            if (idx[a] >= d) fail(line_no, "label " + toks[a] + " out of range for d=" + std::to_string(d));
        }
        if (!(idx[0] < idx[1] && idx[1] < idx[2]))
            fail(line_no, "labels must be strictly increasing");
        double re, im = 0.0;
        if (!parse_double(toks[3], re)) fail(line_no, "bad value '" + toks[3] + "'");
        if (complex_field && !parse_double(toks[4], im)) fail(line_no, "bad value '" + toks[4] + "'");
        const std::size_t off = t.offset(idx[0], idx[1], idx[2]);
        if (seen[off]) fail(line_no, "duplicate triple");
        seen[off] = 1;
        if constexpr (std::is_same_v<T, cdouble>)
            t.packed()[off] = cdouble(re, im);
        else
            t.packed()[off] = re;
    }
    OmegaFile out{std::move(t), 0};
    for (char s : seen)
        if (!s) ++out.missing_triples;
    return out;
}

} // namespace

OmegaFile read_omega(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw InputError("line 1: empty file");
    const auto toks = split_ws(header);
    if (toks.size() != 3 || toks[0] != "ist3" || toks[1].rfind("d=", 0) != 0 ||
        toks[2].rfind("field=", 0) != 0)
        fail(1, "expected header 'ist3 d=<d> field=<real|complex>'");
    double dv;
    if (!parse_double(toks[1].substr(2), dv) || dv != std::floor(dv) || dv < 3)
        fail(1, "bad dimension '" + toks[1] + "' (need integer d >= 3)");
    const int d = static_cast<int>(dv);
    const std::string field = toks[2].substr(6);
    if (field == "real") return read_body<double>(in, d, false, 1);
    if (field == "complex") return read_body<cdouble>(in, d, true, 1);
    fail(1, "unknown field '" + field + "' (expected real or complex)");
}

OmegaFile read_omega_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_omega(in);
}

namespace {

template <class T>
void write_omega_impl(std::ostream& out, const OmegaTensor<T>& t) {
    const int d = t.dim();
    out << "ist3 d=" << d << " field=" << (std::is_same_v<T, cdouble> ? "complex" : "real") << "\n";
    auto vals = t.packed();
    std::size_t idx = 0;
    for (int i = 0; i + 2 < d; ++i)
        for (int j = i + 1; j + 1 < d; ++j)
            for (int k = j + 1; k < d; ++k, ++idx) {
                out << i << ' ' << j << ' ' << k;
                if constexpr (std::is_same_v<T, cdouble>)
                    out << ' ' << fmt17(vals[idx].real()) << ' ' << fmt17(vals[idx].imag());
                else
                    out << ' ' << fmt17(vals[idx]);
                out << '\n';
            }
}

} // namespace

void write_omega(std::ostream& out, const OmegaTensor<double>& t) { write_omega_impl(out, t); }
void write_omega(std::ostream& out, const OmegaTensor<cdouble>& t) { write_omega_impl(out, t); }

void write_omega_file(const std::string& path, const OmegaTensor<double>& t) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    write_omega(out, t);
}

void write_omega_file(const std::string& path, const OmegaTensor<cdouble>& t) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    write_omega(out, t);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& tok : out) {
        const auto b = tok.find_first_not_of(" \t");
        const auto e = tok.find_last_not_of(" \t");
        tok = (b == std::string::npos) ? std::string{} : tok.substr(b, e - b + 1);
    }
    return out;
}

bool parse_row(const std::vector<std::string>& toks, std::vector<double>& row) {
    row.clear();
    for (const auto& tok : toks) {
        double v;
        if (!parse_double(tok, v)) return false;
        row.push_back(v);
    }
    return true;
}

} // namespace

CsvSamples read_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    bool had_header = false;
    int line_no = 0;
    std::size_t cols = 0;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto toks = split_csv(line);
        if (!parse_row(toks, row)) {
            if (rows.empty() && !had_header) {
                had_header = true; // non-numeric first line
                continue;
            }
            fail(line_no, "non-numeric value in sample row");
        }
        for (double v : row)
            if (!std::isfinite(v)) fail(line_no, "non-finite sample value");
        if (rows.empty())
            cols = row.size();
        else if (row.size() != cols)
            fail(line_no, "expected " + std::to_string(cols) + " columns, got " +
                              std::to_string(row.size()));
        rows.push_back(row);
    }
    if (rows.empty()) throw InputError("no sample rows found");
    CsvSamples out;
    out.had_header = had_header;
    out.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < cols; ++j)
            out.samples(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    return out;
}

CsvSamples read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_csv(in);
}

} // namespace ist::io
