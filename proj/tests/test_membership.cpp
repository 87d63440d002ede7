#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "ledgerflow/error.hpp"
#include "ledgerflow/membership.hpp"
#include "support.hpp"

using namespace ledgerflow;
using testkit::TestNet;

TEST_SUITE_BEGIN("membership");

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::IoError;
}

}  // namespace

TEST_CASE("identities derive deterministically from seeds") {
  const Bytes seed = testkit::test_seed("alpha");
  const auto a = generate_identity(Role::STAGING, seed, "alpha");
  const auto b = generate_identity(Role::STAGING, seed, "alpha");
  CHECK(a.identity.member_id == b.identity.member_id);
  CHECK(a.identity.role == Role::STAGING);
  CHECK(a.identity.member_id == compute_digest(a.identity.public_key).hex());
}

TEST_CASE("short seeds are rejected") {
  Bytes tiny(8, 1);
  CHECK(code_of([&] { generate_identity(Role::WMS, tiny, "x"); }) ==
        Errc::SeedTooShort);
}

TEST_CASE("1000 distinct seeds give 1000 distinct member ids") {
  std::set<std::string> ids;
  for (int i = 0; i < 1000; ++i) {
    ids.insert(generate_identity(Role::CLIENT,
                                 testkit::test_seed("s" + std::to_string(i)), "p")
                   .identity.member_id);
  }
  CHECK(ids.size() == 1000);
}

TEST_CASE("bootstrap admits the first member with zero approvals") {
  const auto gen = generate_identity(Role::WMS, testkit::test_seed("boot"), "boot");
  MembershipRegistry empty;
  const MembershipRegistry after =
      approve_join(empty, make_join_request(gen.identity, gen.seed), {}, 0);
  CHECK(after.size() == 1);
  CHECK(after.has(gen.identity.member_id));
  CHECK(empty.size() == 0);  // input untouched
}

TEST_CASE("strict majority quorum: 3 of 5 admits, 2 of 5 does not") {
  TestNet net = testkit::make_members(5);
  const auto cand = generate_identity(Role::CLIENT, testkit::test_seed("cand"), "cand");
  const JoinRequest request = make_join_request(cand.identity, cand.seed);

  std::vector<Approval> three;
  for (int i = 0; i < 3; ++i) {
    three.push_back(make_approval(cand.identity, net.ids[static_cast<std::size_t>(i)],
                                  net.seeds.at(net.ids[static_cast<std::size_t>(i)])));
  }
  const MembershipRegistry admitted = approve_join(net.registry, request, three, 9);
  CHECK(admitted.size() == 6);
  CHECK(admitted.admission_log().back().approvers.size() == 3);

  std::vector<Approval> two(three.begin(), three.begin() + 2);
  CHECK(code_of([&] { approve_join(net.registry, request, two, 9); }) ==
        Errc::InsufficientApprovals);
}

TEST_CASE("duplicate members and bad approvals are rejected") {
  TestNet net = testkit::make_members(3);
  const auto cand = generate_identity(Role::CLIENT, testkit::test_seed("dup"), "dup");
  const JoinRequest request = make_join_request(cand.identity, cand.seed);

  std::vector<Approval> approvals;
  for (const std::string& id : net.ids) {
    approvals.push_back(make_approval(cand.identity, id, net.seeds.at(id)));
  }
  const MembershipRegistry admitted = approve_join(net.registry, request, approvals, 5);
  CHECK(code_of([&] { approve_join(admitted, request, approvals, 6); }) ==
        Errc::DuplicateMember);

  // an approval signed with the wrong key
  std::vector<Approval> forged = approvals;
  forged[0].signature = crypto::sign(to_bytes("something else"), net.seeds.at(net.ids[0]));
  CHECK(code_of([&] { approve_join(net.registry, request, forged, 5); }) ==
        Errc::BadApprovalSignature);

  // an approval from a non-member
  std::vector<Approval> outsider = approvals;
  outsider[0].member_id = "deadbeef";
  CHECK(code_of([&] { approve_join(net.registry, request, outsider, 5); }) ==
        Errc::BadApprovalSignature);
}

TEST_CASE("duplicate approvers collapse to one vote") {
  TestNet net = testkit::make_members(4);
  const auto cand = generate_identity(Role::CLIENT, testkit::test_seed("da"), "da");
  const JoinRequest request = make_join_request(cand.identity, cand.seed);
  const Approval one =
      make_approval(cand.identity, net.ids[0], net.seeds.at(net.ids[0]));
  // quorum is 3; the same approver three times is still one approval
  CHECK(code_of([&] { approve_join(net.registry, request, {one, one, one}, 7); }) ==
        Errc::InsufficientApprovals);
}

TEST_CASE("admission iff approvals exceed half, over random subsets") {
  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    TestNet net = testkit::make_members(n, "q" + std::to_string(trial));
    const auto cand = generate_identity(
        Role::CLIENT, testkit::test_seed("qc" + std::to_string(trial)), "qc");
    const JoinRequest request = make_join_request(cand.identity, cand.seed);
    const int k = static_cast<int>(rng() % (n + 1));
    std::vector<Approval> approvals;
    for (int i = 0; i < k; ++i) {
      approvals.push_back(make_approval(cand.identity, net.ids[static_cast<std::size_t>(i)],
                                        net.seeds.at(net.ids[static_cast<std::size_t>(i)])));
    }
    const bool should_admit = k > n / 2;
    try {
      const MembershipRegistry after = approve_join(net.registry, request, approvals, 1);
      CHECK(should_admit);
      CHECK(after.size() == static_cast<std::size_t>(n) + 1);
    } catch (const Error& e) {
      CHECK_FALSE(should_admit);
      CHECK(e.code() == Errc::InsufficientApprovals);
    }
  }
}

TEST_CASE("verify_signature binds message, key, and member") {
  TestNet net = testkit::make_members(2);
  const Bytes message = to_bytes("hello ledger");
  const Bytes sig = crypto::sign(message, net.seeds.at(net.ids[0]));
  CHECK(verify_signature(message, sig, net.ids[0], net.registry));
  CHECK_FALSE(verify_signature(to_bytes("other"), sig, net.ids[0], net.registry));
  CHECK_FALSE(verify_signature(message, sig, net.ids[1], net.registry));
  CHECK(code_of([&] {
          verify_signature(message, sig, "unknown-member", net.registry);
        }) == Errc::UnknownMember);
}

TEST_CASE("admission log replays to the exact registry") {
  TestNet net = testkit::make_members(6);
  CHECK(audit_admission_log(net.registry));
  CHECK(net.registry.admission_log().size() == 6);
  // registry file round-trip preserves auditability
  const auto path = std::filesystem::temp_directory_path() / "lf_registry.txt";
  write_registry_file(path, net.registry);
  const MembershipRegistry reloaded = read_registry_file(path);
  CHECK(reloaded.size() == net.registry.size());
  CHECK(audit_admission_log(reloaded));
  for (const auto& [id, identity] : net.registry.members()) {
    CHECK(reloaded.has(id));
    CHECK(reloaded.get(id).public_key == identity.public_key);
    CHECK(reloaded.get(id).role == identity.role);
  }
}

TEST_CASE("a tampered registry file is rejected on load") {
  TestNet net = testkit::make_members(3, "tamper");
  const auto path = std::filesystem::temp_directory_path() / "lf_reg_tamper.txt";
  write_registry_file(path, net.registry);
  std::ifstream in(path, std::ios::binary);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const std::size_t at = body.find("\"public_key\":\"") + 15;
  body[at] = body[at] == 'a' ? 'b' : 'a';
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  out.close();
  CHECK_THROWS_AS(read_registry_file(path), Error);
}

TEST_CASE("a forged admission log fails the audit") {
  TestNet net = testkit::make_members(4, "forged");
  // an extra member smuggled in without quorum
  const auto ghost = generate_identity(Role::CLIENT, testkit::test_seed("ghost"), "ghost");
  MembershipRegistry forged = net.registry;
  AdmissionRecord record;
  record.member_id = ghost.identity.member_id;
  record.approvers = {net.ids[0]};  // 1 of 4 is no majority
  record.logical_time = 99;
  forged.admit(ghost.identity, record);
  CHECK_FALSE(audit_admission_log(forged));
  CHECK(audit_admission_log(net.registry));
}

TEST_CASE("seed files restrict permissions and round-trip") {
  const auto path = std::filesystem::temp_directory_path() / "lf_key.seed";
  const Bytes seed = testkit::test_seed("file");
  write_seed_file(path, seed);
  CHECK(read_seed_file(path) == seed);
  const auto perms = std::filesystem::status(path).permissions();
  CHECK((perms & std::filesystem::perms::others_all) == std::filesystem::perms::none);
  CHECK((perms & std::filesystem::perms::group_all) == std::filesystem::perms::none);
}

TEST_SUITE_END();
