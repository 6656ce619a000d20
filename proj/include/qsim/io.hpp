#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qsim/correlator.hpp"
#include "qsim/emitter.hpp"
#include "qsim/modulator.hpp"

namespace qsim {

// Format violations carry the byte offset of the first bad record.
struct FormatError : std::runtime_error {
    std::size_t byte_offset;
    FormatError(const std::string& what, std::size_t offset);
};

// Binary time-tag file: magic "TTAG", version byte 1, then records of
// {channel: u8, time_ps: u64 little-endian}, sorted by time across channels.
void write_timetag_binary(const std::filesystem::path& path, const std::vector<TimeTagStream>& streams);
std::vector<TimeTagStream> read_timetag_binary(const std::filesystem::path& path);

// CSV twin: header "channel,time_ps".
void write_timetag_csv(const std::filesystem::path& path, const std::vector<TimeTagStream>& streams);
std::vector<TimeTagStream> read_timetag_csv(const std::filesystem::path& path);

// Histogram CSV: header "tau_ps,counts,g2".
void write_histogram_csv(const std::filesystem::path& path, const CorrelationHistogram& hist,
                         const std::vector<double>& g2);

// Spectrum CSV: header "offset_hz,intensity".
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumTrace& trace);

// Atomic text write: temp file in the same directory, then rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace qsim
