#include "reverger/event_log.hpp"

#include "reverger/error.hpp"
#include "reverger/serialization.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace reverger {

namespace {

[[noreturn]] void io_error(const std::string& what, const std::filesystem::path& file) {
    throw Error(ErrorCode::IoError, what + " " + file.string() + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const std::filesystem::path& file) {
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            io_error("cannot write", file);
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

}  // namespace

std::string encode_event_line(const SessionEvent& event) {
    return codec::event_to_json(event).dump() + "\n";
}

LoadedLog parse_event_log(std::string_view content) {
    LoadedLog out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        const std::size_t nl = content.find('\n', pos);
        if (nl == std::string_view::npos) {
            out.torn_tail = true;
            break;
        }
        ++line_no;
        const std::string_view line = content.substr(pos, nl - pos);
        pos = nl + 1;
        out.committed_bytes = pos;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::CorruptLog,
                        "line " + std::to_string(line_no) + ": not valid JSON: " + e.what());
        }
        try {
            out.events.push_back(codec::event_from_json(j));
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptLog, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) io_error("cannot open", file);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) io_error("cannot read", file);
    return std::move(buf).str();
}

LoadedLog read_event_log(const std::filesystem::path& file) { return parse_event_log(read_file(file)); }

EventLogWriter::EventLogWriter(const std::filesystem::path& file, std::optional<std::size_t> keep_bytes)
    : file_(file) {
    fd_ = ::open(file.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) io_error("cannot open", file);
    if (keep_bytes && ::ftruncate(fd_, static_cast<off_t>(*keep_bytes)) != 0) {
        ::close(fd_);
        io_error("cannot truncate", file);
    }
}

EventLogWriter::~EventLogWriter() {
    if (fd_ >= 0) ::close(fd_);
}

void EventLogWriter::append(const SessionEvent& event) {
    write_all(fd_, encode_event_line(event), file_);
    if (::fsync(fd_) != 0) io_error("cannot sync", file_);
}

void write_file_atomically(const std::filesystem::path& file, std::string_view content) {
    const auto tmp = std::filesystem::path(file.string() + ".tmp");
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_error("cannot open", tmp);
    try {
        write_all(fd, content, tmp);
        if (::fsync(fd) != 0) io_error("cannot sync", tmp);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    std::error_code ec;
    std::filesystem::rename(tmp, file, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace reverger
