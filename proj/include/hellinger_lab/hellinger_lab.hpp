#pragma once

#include "errors.hpp"
#include "rational.hpp"
#include "time.hpp"
#include "partition.hpp"
#include "space.hpp"
#include "processes.hpp"
#include "hellinger.hpp"
#include "decompose.hpp"
#include "verify.hpp"
#include "report.hpp"
#include "space_file.hpp"
