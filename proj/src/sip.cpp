#include "emt/sip.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace emt::sip {

SipCode::SipCode(int code, std::string reason) : code_(code), reason_(std::move(reason)) {
    if (code_ < 100 || code_ > 699)
        throw MalformedStatusLine("SIP code out of range [100,699]: " + std::to_string(code_));
}

std::string SipCode::render_status_line() const {
    return "SIP/2.0 " + std::to_string(code_) + " " + reason_;
}

SipCode parse_status_line(const std::string& line) {
    constexpr std::string_view prefix = "SIP/2.0 ";
    if (line.rfind(prefix, 0) != 0)
        throw MalformedStatusLine("status line does not start with SIP/2.0: " + line);
    std::string rest = line.substr(prefix.size());
    if (rest.size() < 3 || !std::isdigit(static_cast<unsigned char>(rest[0])) ||
        !std::isdigit(static_cast<unsigned char>(rest[1])) ||
        !std::isdigit(static_cast<unsigned char>(rest[2])))
        throw MalformedStatusLine("status code is not three digits: " + line);
    if (rest.size() > 3 && rest[3] != ' ')
        throw MalformedStatusLine("missing space after status code: " + line);
    int code = (rest[0] - '0') * 100 + (rest[1] - '0') * 10 + (rest[2] - '0');
    if (code < 100 || code > 699)
        throw MalformedStatusLine("status code outside [100,699]: " + line);
    std::string reason = rest.size() > 4 ? rest.substr(4) : "";
    return SipCode{code, std::move(reason)};
}

bool indicates_establishment_failure(const SipCode& code) {
    return code.code() >= 300;
}

void AnnouncementRegistry::insert(AnnouncementRegistryEntry entry) {
    auto [it, inserted] = by_id_.emplace(entry.announcement_id, entries_.size());
    if (!inserted)
        throw RegistryLoadError("duplicate announcement_id: " + entry.announcement_id);
    entries_.push_back(std::move(entry));
}

std::optional<SipCode> AnnouncementRegistry::lookup(const std::string& announcement_id) const {
    auto it = by_id_.find(announcement_id);
    if (it == by_id_.end()) return std::nullopt;
    return entries_[it->second].sip_code;
}

AnnouncementRegistry AnnouncementRegistry::parse_csv(const std::string& content) {
    AnnouncementRegistry reg;
    std::istringstream in(content);
    std::string line;
    bool header = true;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            if (line != "announcement_id,sip_code,description")
                throw RegistryLoadError("registry CSV missing expected header row");
            header = false;
            continue;
        }
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw RegistryLoadError("registry CSV line " + std::to_string(line_no) +
                                    ": expected 3 fields");
        std::string id = line.substr(0, c1);
        std::string code_str = line.substr(c1 + 1, c2 - c1 - 1);
        std::string desc = line.substr(c2 + 1);
        int code;
        try {
            size_t used = 0;
            code = std::stoi(code_str, &used);
            if (used != code_str.size()) throw std::invalid_argument(code_str);
        } catch (const std::exception&) {
            throw RegistryLoadError("registry CSV line " + std::to_string(line_no) +
                                    ": bad sip_code '" + code_str + "'");
        }
        reg.insert({std::move(id), SipCode{code, ""}, std::move(desc)});
    }
    if (header) throw RegistryLoadError("registry CSV is empty");
    return reg;
}

AnnouncementRegistry AnnouncementRegistry::load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw RegistryLoadError("cannot open registry file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace emt::sip
