# Copyright 2026 exlb contributors
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

"""Exception hierarchy shared by the library and the command modules."""


class ExlbError(Exception):
    """Base class for every error raised by exlb."""

    # Process exit code used by the command layer.
    rc = 3


class ConfigError(ExlbError):
    rc = 1


class NonHermitian(ExlbError):
    rc = 1


class MassNotOne(ExlbError):
    rc = 1


class DegenerateSupport(ExlbError):
    """Support of the measure lies in two lines.

    Only raised by strict validation; the default is to flag the measure
    and hand it to the degenerate model.
    """
    rc = 1


class InvalidDerivatives(ExlbError):
    rc = 1


class ResolutionTooCoarse(ExlbError):
    rc = 3


class QuadratureFailure(ExlbError):
    rc = 3


class IdentityViolation(ExlbError):
    """The sweep census disagrees with the labelled component count."""
    rc = 2

    def __init__(self, msg, audit=None):
        super(IdentityViolation, self).__init__(msg)
        self.audit = audit


class ResolutionWarning(UserWarning):
    """Grid spacing is coarser than the requested points per wavelength."""
