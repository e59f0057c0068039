#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "emt/sip.hpp"

using namespace emt::sip;

TEST_CASE("parse_status_line accepts well-formed lines") {
    auto busy = parse_status_line("SIP/2.0 486 Busy Here");
    CHECK(busy.code() == 486);
    CHECK(busy.reason() == "Busy Here");

    auto ok = parse_status_line("SIP/2.0 200 OK");
    CHECK(ok.code() == 200);
    CHECK(ok.reason() == "OK");
}

TEST_CASE("parse_status_line rejects malformed lines") {
    CHECK_THROWS_AS(parse_status_line("HTTP/1.1 200 OK"), MalformedStatusLine);
    CHECK_THROWS_AS(parse_status_line("SIP/2.0 20 OK"), MalformedStatusLine);
    CHECK_THROWS_AS(parse_status_line("SIP/2.0 abc OK"), MalformedStatusLine);
    CHECK_THROWS_AS(parse_status_line("SIP/2.0 700 Nope"), MalformedStatusLine);
    CHECK_THROWS_AS(parse_status_line("SIP/2.0 099 Low"), MalformedStatusLine);
    CHECK_THROWS_AS(parse_status_line("SIP/2.0 180Ringing"), MalformedStatusLine);
    CHECK_THROWS_AS(parse_status_line(""), MalformedStatusLine);
}

TEST_CASE("parse then render is identity on well-formed lines") {
    for (const std::string line : {"SIP/2.0 486 Busy Here", "SIP/2.0 200 OK",
                                   "SIP/2.0 180 Ringing", "SIP/2.0 503 Service Unavailable",
                                   "SIP/2.0 608 Rejected"}) {
        CHECK(parse_status_line(line).render_status_line() == line);
    }
}

TEST_CASE("establishment failure iff code >= 300") {
    CHECK(indicates_establishment_failure(SipCode{503, "Service Unavailable"}));
    CHECK_FALSE(indicates_establishment_failure(SipCode{200, "OK"}));
    CHECK_FALSE(indicates_establishment_failure(SipCode{180, "Ringing"}));
    for (int code = 100; code <= 699; ++code) {
        SipCode c{code, ""};
        CHECK(indicates_establishment_failure(c) == (code >= 300));
        CHECK(static_cast<int>(c.code_class()) == code / 100);
    }
}

TEST_CASE("registry lookup and duplicate rejection") {
    AnnouncementRegistry reg = AnnouncementRegistry::parse_csv(
        "announcement_id,sip_code,description\n"
        "ann-out-of-coverage,480,callee out of network coverage\n"
        "ann-busy,486,busy announcement\n");
    auto hit = reg.lookup("ann-out-of-coverage");
    REQUIRE(hit.has_value());
    CHECK(hit->code() == 480);
    CHECK_FALSE(reg.lookup("missing-id").has_value());

    CHECK_THROWS_AS(reg.insert({"ann-busy", SipCode{486, ""}, "dup"}), RegistryLoadError);
    CHECK_THROWS_AS(AnnouncementRegistry::parse_csv(
                        "announcement_id,sip_code,description\n"
                        "a,480,x\n"
                        "a,486,y\n"),
                    RegistryLoadError);
}

TEST_CASE("registry load is order-independent") {
    std::vector<std::string> rows = {"a,480,first", "b,486,second", "c,503,third",
                                     "d,608,fourth"};
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(rows.begin(), rows.end(), rng);
        std::string csv = "announcement_id,sip_code,description\n";
        for (const auto& r : rows) csv += r + "\n";
        auto reg = AnnouncementRegistry::parse_csv(csv);
        CHECK(reg.lookup("a")->code() == 480);
        CHECK(reg.lookup("b")->code() == 486);
        CHECK(reg.lookup("c")->code() == 503);
        CHECK(reg.lookup("d")->code() == 608);
    }
}
