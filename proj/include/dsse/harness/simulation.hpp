#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dsse/harness/phi.hpp"
#include "dsse/owner.hpp"
#include "dsse/server.hpp"
#include "dsse/transport.hpp"
#include "dsse/user.hpp"

namespace dsse::harness {

inline constexpr std::uint64_t kDefaultPeriod = 600;           // one PHI file every 10 minutes
inline constexpr std::uint64_t kDefaultRefreshEvery = 52'560;  // one year of files
inline constexpr std::uint64_t kDefaultStartTime = 1'577'836'800;  // 2020-01-01T00:00:00Z

/// Filter capacity for one refresh period: every chain label added in the
/// period plus a digit embedding of up to six digits per keyword.
std::uint64_t default_bloom_capacity(std::uint64_t files_per_period);

struct SimulationConfig {
    Mode mode = Mode::full;
    double target_fp = 0x1p-30;
    std::uint64_t bloom_capacity = 0;  // 0: default_bloom_capacity(refresh_every)
    std::uint64_t refresh_every = kDefaultRefreshEvery;  // 0 disables periodic filter refresh
    std::uint64_t freshness_window = 2 * kDefaultPeriod;
    bool prune_on_merge = false;
    std::uint32_t history_stride = 8;
    std::uint32_t history_depth = 8;
    /// Route every message through a loopback TCP listener instead of the in-process channel.
    bool loopback_tcp = false;
    /// Keep every emitted chain label for forward-privacy checks.
    bool record_labels = false;
};

struct QueryOutcome {
    enum class Stage { accepted, not_found, token_rejected, stale_epoch, search_fault, verify_failed };

    Stage stage = Stage::search_fault;
    std::string detail;
    std::vector<FileId> ids;
    std::vector<Bytes> ciphertexts;
    std::uint64_t counter = 0;
    std::uint32_t lookups = 0;
    GuessStats guess;
    VerifyReport report;
    std::optional<Proof> proof;
    bool retried = false;

    bool verified() const { return stage == Stage::accepted; }
};

std::string_view stage_name(QueryOutcome::Stage s);

/// An independent channel to the simulation's server, for concurrent queries.
struct Connection {
    std::unique_ptr<Transport> transport;
    std::unique_ptr<ServerClient> client;
};

/// Data owner, cloud server and authorized users wired together over a
/// Transport, with a plaintext oracle kept in lockstep.
class Simulation {
public:
    Simulation(const SimulationConfig& config, std::uint64_t now);
    ~Simulation();

    const SimulationConfig& config() const noexcept { return config_; }
    Owner& owner() noexcept { return owner_; }
    PlaintextOracle& oracle() noexcept { return oracle_; }
    ServerClient& client() noexcept { return *client_; }
    ServerEndpoint& endpoint() noexcept { return *endpoint_; }
    std::uint64_t files_uploaded() const noexcept { return files_; }
    std::uint64_t last_upload_time() const noexcept { return last_time_; }
    const std::vector<Block>& emitted_labels() const noexcept { return labels_; }

    /// AddFile on the owner, ship the payload, update the oracle; triggers a
    /// Bloom refresh every refresh_every files in full mode.
    FileId upload(const PhiFile& file);
    FileId upload(ByteView document, const std::vector<std::string>& keywords, std::uint64_t now);

    void refresh(std::uint64_t now);

    /// A new channel of the configured kind (in-process or loopback TCP).
    Connection connect();

    UserCredentials enroll(const std::string& name);
    /// Rotate the group key excluding `revoked`; returns re-keyed credentials of every remaining user.
    std::map<std::string, UserCredentials> revoke(const std::string& revoked);

    /// Owner-issued token, owner-side verification.
    QueryOutcome owner_query(const std::string& keyword, std::uint64_t now, ServerClient* via = nullptr);
    /// Fetch BF_s, guess the counter, search, verify (full mode only).
    QueryOutcome user_query(const UserCredentials& creds, const std::string& keyword, std::uint64_t now,
                            ServerClient* via = nullptr);
    /// User search with the counter supplied by the owner instead of guessed; still fully verified.
    QueryOutcome assisted_user_query(const UserCredentials& creds, const std::string& keyword, std::uint64_t now,
                                     ServerClient* via = nullptr);

    void set_adversary(Adversary a);

private:
    QueryOutcome search_and_verify(ServerClient& client, const UserCredentials& creds, const std::string& keyword,
                                   std::uint64_t cnt, std::uint64_t now, QueryOutcome outcome);

    SimulationConfig config_;
    Owner owner_;
    std::unique_ptr<ServerEndpoint> endpoint_;
    std::unique_ptr<TcpListener> listener_;
    std::unique_ptr<Transport> transport_;
    std::unique_ptr<ServerClient> client_;
    PlaintextOracle oracle_;
    std::uint64_t files_ = 0;
    std::uint64_t last_time_ = 0;
    std::vector<Block> labels_;
};

}  // namespace dsse::harness
