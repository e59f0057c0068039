#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace emt::sip {

enum class SipCodeClass {
    Provisional = 1,   // 1xx
    Success = 2,       // 2xx
    Redirection = 3,   // 3xx
    ClientFailure = 4, // 4xx
    ServerFailure = 5, // 5xx
    GlobalFailure = 6, // 6xx
};

// A SIP status code plus its reason phrase. Only the numeric code drives any
// logic; the reason phrase is carried verbatim for reporting.
class SipCode {
public:
    SipCode(int code, std::string reason);

    int code() const { return code_; }
    const std::string& reason() const { return reason_; }
    SipCodeClass code_class() const { return static_cast<SipCodeClass>(code_ / 100); }

    std::string render_status_line() const;

    friend bool operator==(const SipCode& a, const SipCode& b) {
        return a.code_ == b.code_ && a.reason_ == b.reason_;
    }

private:
    int code_;
    std::string reason_;
};

struct MalformedStatusLine : std::runtime_error {
    explicit MalformedStatusLine(const std::string& what) : std::runtime_error(what) {}
};

// Parses `SIP/2.0 <3 digits> <reason>`. Codes outside [100,699] are rejected.
SipCode parse_status_line(const std::string& line);

// True for any code whose class digit is 3..6 (call establishment failed).
bool indicates_establishment_failure(const SipCode& code);

struct AnnouncementRegistryEntry {
    std::string announcement_id;
    SipCode sip_code;
    std::string description;
};

struct RegistryLoadError : std::runtime_error {
    explicit RegistryLoadError(const std::string& what) : std::runtime_error(what) {}
};

// Immutable after load; safe for concurrent reads.
class AnnouncementRegistry {
public:
    AnnouncementRegistry() = default;

    // CSV with header `announcement_id,sip_code,description`. Duplicate ids
    // are rejected.
    static AnnouncementRegistry load_csv(const std::string& path);
    static AnnouncementRegistry parse_csv(const std::string& content);

    void insert(AnnouncementRegistryEntry entry);

    std::optional<SipCode> lookup(const std::string& announcement_id) const;
    bool contains(const std::string& announcement_id) const {
        return by_id_.count(announcement_id) > 0;
    }
    size_t size() const { return entries_.size(); }
    const std::vector<AnnouncementRegistryEntry>& entries() const { return entries_; }

private:
    std::vector<AnnouncementRegistryEntry> entries_;
    std::unordered_map<std::string, size_t> by_id_;
};

}  // namespace emt::sip
