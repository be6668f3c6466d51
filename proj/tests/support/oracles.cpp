#include "support/oracles.hpp"
