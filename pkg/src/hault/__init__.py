"""Confidential balances on an account-visible ledger.

EC-ElGamal notes with auditor mirrors, a transfer constraint system with a
transparent (non-zero-knowledge) proof backend, and a ledger state machine
standing in for the vault contract.
"""

from .elgamal import Ciphertext, Keypair, decrypt, encrypt, encrypt_random, encrypt_transparent
from .group import Curve, Point, check_point, load_profile, lsb_b, point_add, scalar_mul
from .ledger import Ledger, LedgerState, Transaction, TxKind
from .mapping import decode_value, map_homomorphic, map_recoverable
from .notes import Balance, Note, aggregate_notes, decrypt_balance, make_note
from .statement import (
    CONSTRAINT_IDS, TransferProof, TransferStatement, TransferWitness, TransparentBackend,
    evaluate_constraints, prove_transparent, verify,
)
from .wallet import WalletContext

__version__ = "0.1.0"
