"""Command-line interface: ``hault <command> [options]``.

Every command that mutates the ledger takes the state lock, applies one
transaction through ``Ledger.apply`` and only then writes the state file, so
a failed command leaves the state untouched.  Failures print a single line
``error: CODE: message`` on stderr and exit with 2 (validation), 3 (proof),
4 (state conflict) or 5 (io).
"""

from __future__ import annotations

import argparse
import json
import os
import random
import secrets
import sys
from dataclasses import replace

from . import storage
from .elgamal import Keypair
from .errors import HaultError, ReplayMismatch, StaleAggregate, StateConflict, StorageError, ValidationError
from .group import PROFILES, load_profile
from .ledger import Ledger, Transaction, TxKind
from .notes import decrypt_note_value
from .wallet import (
    WalletContext, deposit_tx, force_transfer_tx, load_wallet, mint_tx, save_wallet, transfer_tx, withdraw_tx,
)

DEFAULT_STATE = "hault-state.json"


class Output:
    def __init__(self, as_json: bool):
        self.as_json = as_json

    def emit(self, text: str, **data) -> None:
        if self.as_json:
            print(json.dumps(data, sort_keys=True))
        else:
            print(text)


def _rng(args):
    return random.Random(args.seed) if args.seed is not None else secrets.SystemRandom()


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise ValidationError(f"--{name.replace('_', '-')} is required")
    return value


def _wallet_ctx(args, ledger: Ledger) -> WalletContext:
    keypair, native_id, _ = load_wallet(_need(args, "wallet"), ledger.curve)
    return WalletContext.for_ledger(keypair, native_id, ledger, rng=_rng(args))


def _pk_of(ledger: Ledger, native_id: str):
    return ledger.user(native_id).hault_pk


def _submit(args, ledger: Ledger, tx) -> dict:
    try:
        record = ledger.apply(tx)
    except StaleAggregate as exc:
        raise StaleAggregate(f"{exc}; refresh the wallet (hault balance) and retry") from None
    storage.commit(args.state, ledger, [record])
    return record


# -- commands ------------------------------------------------------------------


def cmd_keygen(args, out):
    if os.path.exists(_need(args, "wallet")) and not args.force:
        raise StateConflict(f"wallet {args.wallet} exists (use --force to overwrite)")
    curve = load_profile(args.profile or "toy")
    keypair = Keypair.generate(curve, _rng(args))
    save_wallet(args.wallet, keypair, args.native_id)
    out.emit(f"wallet {args.wallet}: {args.native_id} pk={keypair.pk.hex()}",
             wallet=args.wallet, native_id=args.native_id, pk=keypair.pk.hex(), profile=curve.name)


def cmd_init_ledger(args, out):
    owner, owner_id, _ = load_wallet(args.owner_wallet)
    curve = owner.curve
    if args.profile and args.profile != curve.name:
        raise ValidationError(f"owner wallet uses profile {curve.name!r}, not {args.profile!r}")
    auditor, auditor_id, _ = load_wallet(args.auditor_wallet, curve)
    funds = {}
    for item in args.fund:
        who, _, amount = item.partition("=")
        try:
            funds[who] = funds.get(who, 0) + int(amount)
        except ValueError:
            raise ValidationError(f"bad --fund value {item!r}, expected ID=AMOUNT") from None
    b = args.b if args.b is not None else curve.default_b
    ledger = Ledger.create(curve, b, owner_id, owner.pk, auditor_id, auditor.pk, funds)
    with storage.locked(args.state):
        storage.create_ledger_files(args.state, ledger)
    out.emit(f"initialized {args.state}: profile={curve.name} b={b} owner={owner_id} auditor={auditor_id}",
             state=args.state, profile=curve.name, b=b, owner=owner_id, auditor=auditor_id)


def cmd_add_user(args, out):
    with storage.locked(args.state):
        ledger = storage.load_ledger(args.state)
        _, caller, _ = load_wallet(_need(args, "wallet"), ledger.curve)
        if args.user_wallet:
            user_kp, user_id, _ = load_wallet(args.user_wallet, ledger.curve)
            native_id, pk = args.native_id or user_id, user_kp.pk
        else:
            native_id = _need(args, "native_id")
            pk = ledger.curve.decode(bytes.fromhex(_need(args, "pk")))
        _submit(args, ledger, Transaction(TxKind.ADD_USER, caller, native_id=native_id, pk=pk))
    out.emit(f"added {native_id}", added=native_id)


def cmd_remove_user(args, out):
    with storage.locked(args.state):
        ledger = storage.load_ledger(args.state)
        _, caller, _ = load_wallet(_need(args, "wallet"), ledger.curve)
        _submit(args, ledger, Transaction(TxKind.REMOVE_USER, caller, native_id=args.native_id))
    out.emit(f"removed {args.native_id}", removed=args.native_id)


def cmd_balance(args, out):
    ledger = storage.load_ledger(args.state)
    ctx = _wallet_ctx(args, ledger)
    value = ctx.balance()
    save_wallet(args.wallet, ctx.keypair, ctx.native_id, ctx.notes)
    out.emit(f"{ctx.native_id}: {value} ({len(ctx.notes)} notes)",
             native_id=ctx.native_id, balance=value, notes=len(ctx.notes))


def cmd_transfer(args, out):
    with storage.locked(args.state):
        ledger = storage.load_ledger(args.state)
        ctx = _wallet_ctx(args, ledger)
        if args.offline:
            _, _, cached = load_wallet(args.wallet, ledger.curve)
            if cached is None:
                raise ValidationError("no cached notes in wallet (run balance first)")
            ctx.notes = cached
        tx = transfer_tx(ctx, args.to, _pk_of(ledger, args.to), args.amount)
        record = _submit(args, ledger, tx)
        ctx.refresh(ledger)
        save_wallet(args.wallet, ctx.keypair, ctx.native_id, ctx.notes)
    out.emit(f"transferred {args.amount} {ctx.native_id} -> {args.to} (seq {record['seq']})",
             seq=record["seq"], sender=ctx.native_id, recipient=args.to, amount=args.amount)


def cmd_mint(args, out):
    with storage.locked(args.state):
        ledger = storage.load_ledger(args.state)
        ctx = _wallet_ctx(args, ledger)
        record = _submit(args, ledger, mint_tx(ctx, args.to, _pk_of(ledger, args.to), args.amount))
    out.emit(f"minted {args.amount} -> {args.to}; supply {ledger.state.total_supply}",
             seq=record["seq"], recipient=args.to, amount=args.amount, supply=ledger.state.total_supply)


def cmd_deposit(args, out):
    with storage.locked(args.state):
        ledger = storage.load_ledger(args.state)
        ctx = _wallet_ctx(args, ledger)
        tx = deposit_tx(ctx, args.to, _pk_of(ledger, args.to), args.amount)
        if args.attach is not None:
            tx = replace(tx, amount=args.attach)
        record = _submit(args, ledger, tx)
    out.emit(f"deposited {tx.amount} -> {args.to}; vault {ledger.state.vault_native_balance}",
             seq=record["seq"], recipient=args.to, amount=tx.amount,
             vault=ledger.state.vault_native_balance, supply=ledger.state.total_supply)


def cmd_withdraw(args, out):
    with storage.locked(args.state):
        ledger = storage.load_ledger(args.state)
        ctx = _wallet_ctx(args, ledger)
        record = _submit(args, ledger, withdraw_tx(ctx, args.payout, args.amount))
    out.emit(f"withdrew {args.amount} -> native {args.payout}; vault {ledger.state.vault_native_balance}",
             seq=record["seq"], payout=args.payout, amount=args.amount,
             vault=ledger.state.vault_native_balance, supply=ledger.state.total_supply)


def cmd_force_transfer(args, out):
    with storage.locked(args.state):
        ledger = storage.load_ledger(args.state)
        ctx = _wallet_ctx(args, ledger)
        source = getattr(args, "from")
        tx = force_transfer_tx(ctx, source, ledger.audit_notes_of(source), args.to, _pk_of(ledger, args.to))
        record = _submit(args, ledger, tx)
    out.emit(f"force-transferred {source} -> {args.to} (seq {record['seq']})",
             seq=record["seq"], source=source, target=args.to)


def cmd_audit_balance(args, out):
    ledger = storage.load_ledger(args.state)
    keypair, _, _ = load_wallet(_need(args, "wallet"), ledger.curve)
    value = ledger.audit_decrypt(keypair.sk, args.user)
    out.emit(f"{args.user}: {value}", user=args.user, balance=value)


def cmd_audit_value(args, out):
    ledger = storage.load_ledger(args.state)
    keypair, _, _ = load_wallet(_need(args, "wallet"), ledger.curve)
    notes = ledger.audit_notes_of(args.user)
    if not 0 <= args.index < len(notes):
        raise ValidationError(f"{args.user} has {len(notes)} audit notes; index {args.index} out of range")
    value = decrypt_note_value(keypair.sk, notes[args.index], ledger.b)
    out.emit(f"{args.user}[{args.index}]: {value}", user=args.user, index=args.index, value=value)


def cmd_supply(args, out):
    s = storage.load_ledger(args.state).state
    out.emit(f"supply {s.total_supply}; vault native {s.vault_native_balance}",
             supply=s.total_supply, vault=s.vault_native_balance, native_accounts=s.native_accounts)


def cmd_verify_log(args, out):
    ledger = storage.load_ledger(args.state)
    replayed = Ledger.replay(ledger.log)
    expected, got = ledger.state.digest(), replayed.state.digest()
    n = len(ledger.log) - 1
    if expected != got:
        raise ReplayMismatch(f"replayed {n} transactions but state digest {got[:16]} != {expected[:16]}")
    out.emit(f"OK, {n} transactions, state digest matches", ok=True, transactions=n, digest=got)


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state", default=os.environ.get("HAULT_STATE", DEFAULT_STATE),
                        help="ledger state file (default: $HAULT_STATE or %(default)s)")
    common.add_argument("--wallet", help="wallet file")
    common.add_argument("--profile", choices=PROFILES, help="curve profile")
    common.add_argument("--json", action="store_true", help="structured output")
    common.add_argument("--seed", type=int, help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="hault", description="Confidential-balance vault simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    p = add("keygen", cmd_keygen, "create a wallet file with a fresh keypair")
    p.add_argument("--native-id", required=True)
    p.add_argument("--force", action="store_true")

    p = add("init-ledger", cmd_init_ledger, "create a new ledger state")
    p.add_argument("--owner-wallet", required=True)
    p.add_argument("--auditor-wallet", required=True)
    p.add_argument("--b", type=int, help="value bit-length (default per profile)")
    p.add_argument("--fund", action="append", default=[], metavar="ID=AMOUNT",
                   help="genesis native-asset balance (repeatable)")

    p = add("add-user", cmd_add_user, "owner: allowlist a user")
    p.add_argument("--native-id")
    p.add_argument("--pk", help="hault public key (hex)")
    p.add_argument("--user-wallet", help="take native id and key from this wallet file")

    p = add("remove-user", cmd_remove_user, "owner: disable a user")
    p.add_argument("--native-id", required=True)

    add("balance", cmd_balance, "decrypt own balance (refreshes the note cache)")

    p = add("transfer", cmd_transfer, "confidential transfer")
    p.add_argument("--to", required=True)
    p.add_argument("--amount", type=int, required=True)
    p.add_argument("--offline", action="store_true", help="build from the wallet's cached notes")

    p = add("mint", cmd_mint, "owner: mint a transparent note")
    p.add_argument("--to", required=True)
    p.add_argument("--amount", type=int, required=True)

    p = add("force-transfer", cmd_force_transfer, "auditor: sweep a user's balance")
    p.add_argument("--from", required=True)
    p.add_argument("--to", required=True)

    p = add("deposit", cmd_deposit, "owner: deposit native assets into a note")
    p.add_argument("--to", required=True)
    p.add_argument("--amount", type=int, required=True)
    p.add_argument("--attach", type=int, help="native amount attached (default: --amount)")

    p = add("withdraw", cmd_withdraw, "owner: withdraw to a native account")
    p.add_argument("--payout", required=True)
    p.add_argument("--amount", type=int, required=True)

    p = add("audit-balance", cmd_audit_balance, "auditor: decrypt a user's balance")
    p.add_argument("--user", required=True)

    p = add("audit-value", cmd_audit_value, "auditor: decrypt one audit note")
    p.add_argument("--user", required=True)
    p.add_argument("--index", type=int, required=True)

    add("supply", cmd_supply, "show total supply and vault balance")
    add("verify-log", cmd_verify_log, "replay the log and compare state digests")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Output(args.json)
    try:
        args.func(args, out)
    except HaultError as exc:
        return _fail(out, exc.code, str(exc), exc.exit_code)
    except OSError as exc:
        return _fail(out, StorageError.code, str(exc), StorageError.exit_code)
    except (KeyError, ValueError) as exc:
        return _fail(out, "VALIDATION", f"{type(exc).__name__}: {exc}", ValidationError.exit_code)
    return 0


def _fail(out: Output, code: str, message: str, status: int) -> int:
    message = " ".join(message.split())
    if out.as_json:
        print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    else:
        print(f"error: {code}: {message}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
