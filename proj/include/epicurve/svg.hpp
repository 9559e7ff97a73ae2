#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace epicurve::svg {

inline std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

// Two-decimal coordinates for drawing; layout does not need more.
inline std::string num(double v) { return fmt::format("{:.2f}", v); }

using Attributes = std::vector<std::pair<std::string, std::string>>;

class Document {
public:
    Document(double width, double height) : width_(width), height_(height) {}

    void element(std::string_view name, const Attributes& attrs) {
        body_ += fmt::format("  <{}{} />\n", name, render(attrs));
    }

    void text(double x, double y, std::string_view content, const Attributes& extra = {}) {
        Attributes attrs{{"x", num(x)}, {"y", num(y)}};
        attrs.insert(attrs.end(), extra.begin(), extra.end());
        body_ += fmt::format("  <text{}>{}</text>\n", render(attrs), escape(content));
    }

    void raw(std::string_view markup) { body_ += markup; }

    std::string str() const {
        return fmt::format(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
            "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\">\n{2}</svg>\n",
            num(width_), num(height_), body_);
    }

private:
    static std::string render(const Attributes& attrs) {
        std::string out;
        for (const auto& [k, v] : attrs) out += fmt::format(" {}=\"{}\"", k, escape(v));
        return out;
    }

    double width_;
    double height_;
    std::string body_;
};

}  // namespace epicurve::svg
