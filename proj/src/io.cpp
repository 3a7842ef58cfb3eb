#include "msig/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace msig {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& line, std::size_t begin, std::size_t end, long row) {
    double v = 0.0;
    auto res = std::from_chars(line.data() + begin, line.data() + end, v);
    if (res.ec != std::errc{} || res.ptr != line.data() + end)
        throw InputError("row " + std::to_string(row) + ": malformed number \"" +
                         line.substr(begin, end - begin) + "\"");
    return v;
}

long parse_id(const std::string& line, std::size_t end, long row) {
    long v = 0;
    auto res = std::from_chars(line.data(), line.data() + end, v);
    if (res.ec != std::errc{} || res.ptr != line.data() + end)
        throw InputError("row " + std::to_string(row) + ": malformed path id \"" + line.substr(0, end) + "\"");
    return v;
}

}  // namespace

SamplePathSet read_paths_csv(const std::string& filename) {
    std::ifstream in(filename);
    if (!in) throw IoError("cannot open " + filename);

    std::string line;
    if (!std::getline(in, line)) throw InputError(filename + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "path,t,x") throw InputError(filename + ": expected header \"path,t,x\"");

    SamplePathSet sps;
    long row = 1;
    long current_id = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            throw InputError("row " + std::to_string(row) + ": expected 3 comma-separated fields");

        const long id = parse_id(line, c1, row);
        const double t = parse_double(line, c1 + 1, c2, row);
        const double x = parse_double(line, c2 + 1, line.size(), row);

        if (id == current_id + 1) {
            sps.paths.emplace_back();
            ++current_id;
        } else if (id != current_id) {
            throw InputError("row " + std::to_string(row) + ": path ids must be 1-based, contiguous and grouped");
        }
        SamplePath& p = sps.paths.back();
        if (!p.times.empty() && !(t > p.times.back()))
            throw InputError("row " + std::to_string(row) + ": time not strictly increasing within path " +
                             std::to_string(id));
        if (!(x > 0.0))
            throw InputError("row " + std::to_string(row) + ": nonpositive value " + format_double(x));
        p.times.push_back(t);
        p.values.push_back(x);
    }
    if (sps.paths.empty()) throw InputError(filename + ": no data rows");

    for (std::size_t i = 0; i < sps.paths.size(); ++i) {
        if (sps.paths[i].times.front() != sps.paths.front().times.front())
            throw InputError("path " + std::to_string(i + 1) + " starts at t=" +
                             format_double(sps.paths[i].times.front()) + " but path 1 starts at t=" +
                             format_double(sps.paths.front().times.front()));
    }
    sps.t0 = sps.paths.front().times.front();
    try {
        validate(sps);
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
    return sps;
}

void write_paths_csv(const std::string& filename, const SamplePathSet& sps) {
    std::ofstream out(filename);
    if (!out) throw IoError("cannot write " + filename);
    out << "path,t,x\n";
    for (std::size_t i = 0; i < sps.paths.size(); ++i) {
        const SamplePath& p = sps.paths[i];
        for (std::size_t j = 0; j < p.times.size(); ++j)
            out << (i + 1) << ',' << format_double(p.times[j]) << ',' << format_double(p.values[j]) << '\n';
    }
    out.flush();
    if (!out) throw IoError("failed while writing " + filename);
}

nlohmann::json load_config(const std::string& filename) {
    std::ifstream in(filename);
    if (!in) throw IoError("cannot open " + filename);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(filename + ": " + e.what());
    }
    if (!j.is_object()) throw InputError(filename + ": config must be a JSON object");
    return j;
}

void reject_unknown_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw InputError("unknown key \"" + item.key() + "\" in " + where);
    }
}

namespace {

void dump_rec(const nlohmann::json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::null:
            out += "null";
            break;
        case nlohmann::json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case nlohmann::json::value_t::string:
            out += j.dump();  // quoting and escaping
            break;
        case nlohmann::json::value_t::number_integer:
            out += std::to_string(j.get<long long>());
            break;
        case nlohmann::json::value_t::number_unsigned:
            out += std::to_string(j.get<unsigned long long>());
            break;
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v))
                out += format_double(v);
            else
                out += "null";  // JSON has no inf/nan
            break;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                break;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                out += pad;
                dump_rec(j[i], out, indent, depth + 1);
                out += i + 1 < j.size() ? ",\n" : "\n";
            }
            out += close_pad + "]";
            break;
        }
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                break;
            }
            out += "{\n";
            std::size_t i = 0;
            for (const auto& item : j.items()) {
                out += pad + nlohmann::json(item.key()).dump() + ": ";
                dump_rec(item.value(), out, indent, depth + 1);
                out += ++i < j.size() ? ",\n" : "\n";
            }
            out += close_pad + "}";
            break;
        }
        default:
            out += "null";
    }
}

}  // namespace

std::string json_to_text(const nlohmann::json& j, int indent) {
    std::string out;
    dump_rec(j, out, indent, 0);
    out += '\n';
    return out;
}

void write_text(const std::string& filename, const std::string& text) {
    std::ofstream out(filename);
    if (!out) throw IoError("cannot write " + filename);
    out << text;
    out.flush();
    if (!out) throw IoError("failed while writing " + filename);
}

void write_json(const std::string& filename, const nlohmann::json& j) {
    write_text(filename, json_to_text(j));
}

std::string iso8601_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace msig
