"""
Unit tests for the exception hierarchy.
"""
import pytest

from ellspin.exceptions import (
    EXIT_INFRASTRUCTURE,
    EXIT_USAGE,
    AccuracyError,
    ClientError,
    ConfigurationError,
    ContractError,
    CriticalError,
    DegenerateNormalizationError,
    EllSpinException,
    GateError,
    InfrastructureError,
    NumericalError,
    ParameterError,
    PoleError,
    SizeCapError,
    exit_code_for,
    is_client_error,
    is_critical,
    is_numerical,
    wrap_error,
)


class TestHierarchy:
    """Test exception categories."""

    @pytest.mark.parametrize("cls", [ConfigurationError, InfrastructureError])
    def test_critical(self, cls):
        """Test critical errors."""
        error = cls("broken")
        assert is_critical(error)
        assert not is_numerical(error)
        assert exit_code_for(error) == EXIT_INFRASTRUCTURE

    @pytest.mark.parametrize("cls", [PoleError, AccuracyError, DegenerateNormalizationError, GateError])
    def test_numerical(self, cls):
        """Test numerical errors."""
        error = cls("singular")
        assert is_numerical(error)
        assert not is_critical(error)
        assert not is_client_error(error)

    @pytest.mark.parametrize("cls", [ParameterError, ContractError, SizeCapError])
    def test_client(self, cls):
        """Test client errors map to the usage exit code."""
        error = cls("bad input")
        assert is_client_error(error)
        assert isinstance(error, ClientError)
        assert exit_code_for(error) == EXIT_USAGE

    def test_plain_exception_is_infrastructure(self):
        """Test unknown exceptions map to exit code 2."""
        assert exit_code_for(RuntimeError("boom")) == EXIT_INFRASTRUCTURE

    def test_base(self):
        """Test every category derives from the base."""
        for cls in (CriticalError, NumericalError, ClientError):
            assert issubclass(cls, EllSpinException)


class TestExceptionPayload:
    """Test message, details and serialization."""

    def test_to_dict(self):
        """Test complex details render as [re, im]."""
        error = PoleError("theta vanishes", details={"x": 1 + 2j, "what": "rho"})
        data = error.to_dict()

        assert data["error"] == "PoleError"
        assert data["message"] == "theta vanishes"
        assert data["details"]["x"] == [1.0, 2.0]
        assert data["details"]["what"] == "rho"

    def test_to_dict_without_details(self):
        """Test details are omitted when empty."""
        assert "details" not in ParameterError("bad").to_dict()

    def test_wrap_error(self):
        """Test wrap_error keeps the original error and merges details."""
        original = PoleError("pole", details={"x": 0j})
        wrapped = wrap_error(original, "check crashed", InfrastructureError, check="dybe")

        assert isinstance(wrapped, InfrastructureError)
        assert wrapped.original_error is original
        assert wrapped.details["check"] == "dybe"
        assert wrapped.details["x"] == 0j
        assert wrapped.details["original_error_type"] == "PoleError"

    def test_wrap_foreign_error(self):
        """Test wrapping a non-ellspin exception."""
        wrapped = wrap_error(OSError("disk full"), "cannot write", InfrastructureError)
        assert wrapped.details == {"original_error_type": "OSError"}
        assert str(wrapped) == "cannot write"
