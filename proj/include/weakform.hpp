#pragma once

#include "weakform/bitset.hpp"
#include "weakform/environment.hpp"
#include "weakform/error.hpp"
#include "weakform/harness.hpp"
#include "weakform/io.hpp"
#include "weakform/language.hpp"
#include "weakform/learning.hpp"
#include "weakform/rng.hpp"
#include "weakform/task.hpp"
#include "weakform/task_space.hpp"
#include "weakform/utility.hpp"
#include "weakform/version.hpp"
