#pragma once

// Buffered line reader over zlib; plain files pass through gzread untouched.

#include <zlib.h>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stepforge/model.hpp"

namespace stepforge::detail {

class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path) : path_(path.string()) {
        file_ = gzopen(path_.c_str(), "rb");
        if (file_ == nullptr) throw InputError("cannot open '" + path_ + "'");
        gzbuffer(file_, 1 << 20);
        buf_.resize(1 << 20);
    }
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;
    ~LineReader() {
        if (file_ != nullptr) gzclose(file_);
    }

    /// Next line without its terminator; false at end of input.
    bool next(std::string_view& line) {
        for (;;) {
            auto nl = std::string_view(buf_.data() + pos_, end_ - pos_).find('\n');
            if (nl != std::string_view::npos) {
                line = std::string_view(buf_.data() + pos_, nl);
                pos_ += nl + 1;
                if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                ++line_no_;
                return true;
            }
            if (eof_) {
                if (pos_ == end_) return false;
                line = std::string_view(buf_.data() + pos_, end_ - pos_);
                pos_ = end_;
                if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                ++line_no_;
                return true;
            }
            fill();
        }
    }

    std::size_t line_number() const noexcept { return line_no_; }
    const std::string& path() const noexcept { return path_; }

private:
    void fill() {
        std::size_t rest = end_ - pos_;
        if (pos_ > 0 && rest > 0) std::copy(buf_.begin() + pos_, buf_.begin() + end_, buf_.begin());
        pos_ = 0;
        end_ = rest;
        if (end_ == buf_.size()) buf_.resize(buf_.size() * 2);
        int n = gzread(file_, buf_.data() + end_, static_cast<unsigned>(buf_.size() - end_));
        if (n < 0) {
            int err = 0;
            throw InputError("read error in '" + path_ + "': " + gzerror(file_, &err));
        }
        if (n == 0) eof_ = true;
        end_ += static_cast<std::size_t>(n);
    }

    std::string path_;
    gzFile file_ = nullptr;
    std::vector<char> buf_;
    std::size_t pos_ = 0, end_ = 0, line_no_ = 0;
    bool eof_ = false;
};

}  // namespace stepforge::detail
