#pragma once

#include <stdexcept>
#include <string>

namespace diffopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedMap : public Error {
public:
    using Error::Error;
};

class DisconnectedDomain : public Error {
public:
    using Error::Error;
};

class NonStochasticInput : public Error {
public:
    using Error::Error;
};

class ZeroDegreeState : public Error {
public:
    using Error::Error;
};

class EvdFailure : public Error {
public:
    using Error::Error;
};

class SvdFailure : public Error {
public:
    using Error::Error;
};

class UnreachableGoal : public Error {
public:
    using Error::Error;
};

class NotInInitiationSet : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

/// A run log whose contents violate the episode-step cap.
class InvalidRunLog : public Error {
public:
    using Error::Error;
};

class DomainMismatch : public Error {
public:
    using Error::Error;
};

/// Bad or missing experiment configuration; maps to CLI exit status 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace diffopt
