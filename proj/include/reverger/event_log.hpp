#pragma once

#include "reverger/session.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reverger {

// JSONL event log. A record is committed once its newline is written, so a
// trailing fragment without one is a torn write and is ignored on load.

std::string encode_event_line(const SessionEvent& event);  // includes '\n'

struct LoadedLog {
    std::vector<SessionEvent> events;
    std::size_t committed_bytes = 0;  // prefix holding complete records
    bool torn_tail = false;
};

// Throws CorruptLog on a malformed committed line.
LoadedLog parse_event_log(std::string_view content);
// Throws IoError when the file cannot be read.
LoadedLog read_event_log(const std::filesystem::path& file);

// Appends records and fsyncs after each one. Not thread-safe.
class EventLogWriter {
public:
    // Opens for append, first cutting the file back to `keep_bytes` when given.
    explicit EventLogWriter(const std::filesystem::path& file,
                            std::optional<std::size_t> keep_bytes = std::nullopt);
    ~EventLogWriter();

    EventLogWriter(const EventLogWriter&) = delete;
    EventLogWriter& operator=(const EventLogWriter&) = delete;

    void append(const SessionEvent& event);

private:
    std::filesystem::path file_;
    int fd_ = -1;
};

// Atomic replace through a temporary file and rename.
void write_file_atomically(const std::filesystem::path& file, std::string_view content);
std::string read_file(const std::filesystem::path& file);  // IoError

}  // namespace reverger
