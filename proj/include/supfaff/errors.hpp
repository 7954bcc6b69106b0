#pragma once

#include <stdexcept>
#include <string>

namespace supfaff {

// Error taxonomy shared by the whole library.  The CLI maps these onto
// stable exit codes (structural/parity -> 3, stratum/domain -> 4,
// capacity -> 5).

struct structural_error : std::runtime_error {
    explicit structural_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct parity_error : structural_error {
    explicit parity_error(const std::string& msg) : structural_error(msg) {}
};

struct singular_body_error : std::runtime_error {
    explicit singular_body_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct stratum_boundary_error : singular_body_error {
    explicit stratum_boundary_error(const std::string& msg) : singular_body_error(msg) {}
};

struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct capacity_error : std::runtime_error {
    explicit capacity_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct branch_error : domain_error {
    explicit branch_error(const std::string& msg) : domain_error(msg) {}
};

struct basis_error : std::runtime_error {
    explicit basis_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace supfaff
