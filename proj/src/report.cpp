#include "fasmobo/common.hpp"
