"""Distributed symmetric key establishment over semi-trusted hubs."""

from .bounds import BoundReport, bound_report, epsilon_auth, epsilon_secret, robustness_ok
from .errors import (
    DskeError,
    DuplicateCoordinateError,
    EmptySecretError,
    FieldMismatchError,
    FormatError,
    IndexOverflowError,
    InsufficientPsrdError,
    InsufficientSharesError,
    KeyDeliveryError,
    MalformedFrameError,
    PeerUnreachableError,
    ReuseAttemptError,
)
from .field import (
    ElementVector,
    FieldElement,
    FieldId,
    add,
    bytes_to_elements,
    encode_index,
    inv,
    mul,
    sub,
)
from .hashing import MessageTagKey, SecretTagKey, message_tag, secret_tag
from .protocol import (
    DiscardReason,
    HubState,
    ReceiverState,
    SessionKey,
    ShareMessage,
    alice_initiate,
    bob_finalize,
    bob_ingest,
    decode_message,
    encode_message,
    hub_relay,
)
from .psrd import Direction, EntropySource, PsrdTable, generate_table
from .sharing import (
    SecretCandidate,
    ShareBundle,
    SharingParams,
    candidate_secrets,
    generate_shares,
    reconstruct,
)

__version__ = "0.1.0"
