#include "qsim/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace qsim {

FormatError::FormatError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), byte_offset(offset) {}

namespace {

struct Record {
    std::uint8_t channel;
    std::int64_t time_ps;
};

std::vector<Record> interleave(const std::vector<TimeTagStream>& streams) {
    std::vector<Record> records;
    std::size_t total = 0;
    for (const auto& s : streams) total += s.timestamps.size();
    records.reserve(total);
    for (const auto& s : streams) {
        s.validate();
        if (s.channel < 0 || s.channel > 255) throw std::invalid_argument("timetag write: channel must fit a byte");
        for (auto t : s.timestamps) records.push_back({static_cast<std::uint8_t>(s.channel), t});
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const Record& a, const Record& b) { return a.time_ps < b.time_ps; });
    return records;
}

std::vector<TimeTagStream> collect(const std::vector<Record>& records) {
    std::map<int, TimeTagStream> by_channel;
    std::int64_t last = 0;
    for (const auto& r : records) {
        auto& s = by_channel[r.channel];
        s.channel = r.channel;
        // duplicate times on one channel collapse to strict ordering
        if (!s.timestamps.empty() && r.time_ps <= s.timestamps.back())
            s.timestamps.push_back(s.timestamps.back() + 1);
        else
            s.timestamps.push_back(r.time_ps);
        last = std::max(last, s.timestamps.back());
    }
    std::vector<TimeTagStream> out;
    out.reserve(by_channel.size());
    for (auto& [ch, s] : by_channel) {
        s.duration_ps = last;  // duration is not stored in the format
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

void write_timetag_binary(const std::filesystem::path& path, const std::vector<TimeTagStream>& streams) {
    const auto records = interleave(streams);
    std::string buf;
    buf.reserve(5 + records.size() * 9);
    buf += "TTAG";
    buf += '\x01';
    for (const auto& r : records) {
        buf += static_cast<char>(r.channel);
        auto t = static_cast<std::uint64_t>(r.time_ps);
        for (int i = 0; i < 8; ++i) buf += static_cast<char>((t >> (8 * i)) & 0xff);
    }
    write_text_atomic(path, buf);
}

std::vector<TimeTagStream> read_timetag_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 5 || buf.compare(0, 4, "TTAG") != 0) throw FormatError("bad magic", 0);
    if (buf[4] != '\x01') throw FormatError("unsupported version", 4);
    if ((buf.size() - 5) % 9 != 0) throw FormatError("truncated record", buf.size() - (buf.size() - 5) % 9);

    std::vector<Record> records;
    records.reserve((buf.size() - 5) / 9);
    std::int64_t prev = -1;
    for (std::size_t off = 5; off < buf.size(); off += 9) {
        Record r;
        r.channel = static_cast<std::uint8_t>(buf[off]);
        std::uint64_t t = 0;
        for (int i = 0; i < 8; ++i) t |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[off + 1 + i])) << (8 * i);
        r.time_ps = static_cast<std::int64_t>(t);
        if (r.time_ps < prev) throw FormatError("records not sorted by time", off);
        prev = r.time_ps;
        records.push_back(r);
    }
    return collect(records);
}

void write_timetag_csv(const std::filesystem::path& path, const std::vector<TimeTagStream>& streams) {
    const auto records = interleave(streams);
    std::ostringstream out;
    out << "channel,time_ps\n";
    for (const auto& r : records) out << static_cast<int>(r.channel) << ',' << r.time_ps << '\n';
    write_text_atomic(path, out.str());
}

std::vector<TimeTagStream> read_timetag_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::size_t offset = 0;
    if (!std::getline(in, line) || line != "channel,time_ps") throw FormatError("bad CSV header", 0);
    offset += line.size() + 1;

    std::vector<Record> records;
    std::int64_t prev = -1;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("missing comma", offset);
        try {
            const int ch = std::stoi(line.substr(0, comma));
            const std::int64_t t = std::stoll(line.substr(comma + 1));
            if (ch < 0 || ch > 255) throw FormatError("channel out of range", offset);
            if (t < prev) throw FormatError("records not sorted by time", offset);
            prev = t;
            records.push_back({static_cast<std::uint8_t>(ch), t});
        } catch (const std::invalid_argument&) {
            throw FormatError("unparsable record", offset);
        } catch (const std::out_of_range&) {
            throw FormatError("unparsable record", offset);
        }
        offset += line.size() + 1;
    }
    return collect(records);
}

void write_histogram_csv(const std::filesystem::path& path, const CorrelationHistogram& hist,
                         const std::vector<double>& g2) {
    std::ostringstream out;
    out << "tau_ps,counts,g2\n";
    out.precision(12);
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        out << hist.bin_center_ps(static_cast<int>(k)) << ',' << hist.counts[k] << ','
            << (k < g2.size() ? g2[k] : 0.0) << '\n';
    }
    write_text_atomic(path, out.str());
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumTrace& trace) {
    std::ostringstream out;
    out << "offset_hz,intensity\n";
    out.precision(12);
    for (std::size_t i = 0; i < trace.offsets_hz.size(); ++i)
        out << trace.offsets_hz[i] << ',' << trace.intensities[i] << '\n';
    write_text_atomic(path, out.str());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace qsim
