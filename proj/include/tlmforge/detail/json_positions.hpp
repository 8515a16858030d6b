#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

namespace tlmforge::detail {

struct TextPosition {
    std::size_t line = 1;
    std::size_t column = 1;
};

inline TextPosition position_at(std::string_view text, std::size_t offset) {
    TextPosition pos;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++pos.line;
            pos.column = 1;
        } else {
            ++pos.column;
        }
    }
    return pos;
}

inline std::string escape_pointer_token(std::string_view token) {
    std::string out;
    for (char c : token) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

/// Maps the JSON pointer of every value in a well-formed document to the
/// line and column where that value starts. Only run on text that a JSON
/// parser has already accepted.
class PositionIndex {
public:
    PositionIndex() = default;
    explicit PositionIndex(std::string_view text) : text_(text) {
        skip_ws();
        value("");
    }

    /// Position of `pointer`, or of its closest indexed ancestor.
    TextPosition find(std::string pointer) const {
        while (true) {
            if (auto it = offsets_.find(pointer); it != offsets_.end()) return position_at(text_, it->second);
            if (pointer.empty()) return {};
            pointer.erase(pointer.rfind('/'));
        }
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\n' || text_[pos_] == '\r' || text_[pos_] == '\t'))
            ++pos_;
    }

    std::string string_token() {
        std::size_t begin = pos_++;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\') ++pos_;
            ++pos_;
        }
        ++pos_;
        return nlohmann::json::parse(text_.substr(begin, pos_ - begin)).get<std::string>();
    }

    void value(const std::string& pointer) {
        offsets_.emplace(pointer, pos_);
        if (pos_ >= text_.size()) return;
        char c = text_[pos_];
        if (c == '{') {
            ++pos_;
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != '}') {
                std::string key = string_token();
                skip_ws();
                ++pos_; // ':'
                skip_ws();
                value(pointer + "/" + escape_pointer_token(key));
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                }
            }
            ++pos_;
        } else if (c == '[') {
            ++pos_;
            skip_ws();
            std::size_t index = 0;
            while (pos_ < text_.size() && text_[pos_] != ']') {
                value(pointer + "/" + std::to_string(index++));
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                }
            }
            ++pos_;
        } else if (c == '"') {
            string_token();
        } else {
            while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
                   text_[pos_] != ' ' && text_[pos_] != '\n' && text_[pos_] != '\r' && text_[pos_] != '\t')
                ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::map<std::string, std::size_t> offsets_;
};

} // namespace tlmforge::detail
