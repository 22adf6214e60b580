#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RefinementViolation : public Error {
 public:
  explicit RefinementViolation(int t)
      : Error("partition at time " + std::to_string(t + 1) + " does not refine partition at time " +
              std::to_string(t)),
        time(t) {}
  int time;
};

class NonAtomicTerminal : public Error {
 public:
  NonAtomicTerminal() : Error("terminal partition must be atomic") {}
};

class InvalidPartition : public Error {
 public:
  using Error::Error;
};

class SizeOverflow : public Error {
 public:
  explicit SizeOverflow(std::size_t cap)
      : Error("atom count exceeds cap " + std::to_string(cap)), cap(cap) {}
  std::size_t cap;
};

class NotAStoppingTime : public Error {
 public:
  explicit NotAStoppingTime(int t)
      : Error("{T <= " + std::to_string(t) + "} is not a union of cells of F_" + std::to_string(t)),
        time(t) {}
  NotAStoppingTime(const std::string& what, int t) : Error(what), time(t) {}
  int time;
};

class NotMeasurable : public Error {
 public:
  using Error::Error;
};

class NotSupermartingale : public Error {
 public:
  NotSupermartingale(int t, std::size_t cell)
      : Error("not a supermartingale at time " + std::to_string(t) + ", cell " + std::to_string(cell)),
        time(t),
        cell(cell) {}
  int time;
  std::size_t cell;
};

class NotLocallyAC : public Error {
 public:
  NotLocallyAC(int t, std::size_t cell)
      : Error("density is infinite at time " + std::to_string(t) + ", cell " + std::to_string(cell) +
              " (measure not locally absolutely continuous)"),
        time(t),
        cell(cell) {}
  int time;
  std::size_t cell;
};

class NotDominating : public Error {
 public:
  using Error::Error;
};

class NotAnnouncing : public Error {
 public:
  using Error::Error;
};

class FactorNotAC : public Error {
 public:
  explicit FactorNotAC(std::size_t k)
      : Error("factor " + std::to_string(k) + " is not absolutely continuous"), index(k) {}
  std::size_t index;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason)
      : Error("parse error at line " + std::to_string(line) + ": " + reason), line(line), reason(reason) {}
  int line;
  std::string reason;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace hlab
