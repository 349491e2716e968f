"""Exception hierarchy.

Every failure raised by the library derives from :class:`XrorError`. The
``exit_code`` class attribute lets the CLI map an error class to a process
exit status without a lookup table.
"""

from __future__ import annotations


class XrorError(Exception):
    exit_code = 2


# core model

class ModelError(XrorError):
    pass


class EmptyRecording(ModelError):
    pass


class TooFewFrames(ModelError):
    pass


class AllZeroDeltas(ModelError):
    pass


class UnknownColumn(ModelError, KeyError):
    pass


class InvalidRecording(ModelError):
    pass


class WrongSchema(ModelError):
    pass


# float codec

class CodecError(XrorError):
    pass


class DimensionOverflow(CodecError):
    pass


class BadMagic(CodecError):
    """Raised by the codec and by every source-format parser."""


class UnsupportedVersion(CodecError):
    pass


class BadPredictor(CodecError):
    pass


class TruncatedPayload(CodecError):
    pass


class ArithDecoderDesync(CodecError):
    pass


class TrailingData(CodecError):
    pass


# container

class ContainerError(XrorError):
    pass


class NotBson(ContainerError):
    pass


class MissingField(ContainerError):
    def __init__(self, name: str):
        super().__init__(f"missing field {name!r}")
        self.name = name


class BlobCorrupt(ContainerError):
    pass


class StreamShapeMismatch(ContainerError):
    pass


class UnsupportedSchema(ContainerError):
    pass


class InvalidField(ContainerError):
    pass


# source parsers

class ParseError(XrorError):
    pass


class TruncatedSection(ParseError):
    def __init__(self, tag: int | str, offset: int):
        super().__init__(f"section {tag} truncated at offset {offset}")
        self.tag = tag
        self.offset = offset


class NegativeCount(ParseError):
    pass


class CountTooLarge(ParseError):
    pass


class StringTooLong(ParseError):
    pass


class BadSection(ParseError):
    pass


class BadField(ParseError):
    pass


class InflateError(ParseError):
    pass


class TruncatedBody(ParseError):
    pass


class BadJson(ParseError):
    pass


class TruncatedStroke(ParseError):
    pass


class UnknownFormat(ParseError):
    pass


# pipeline

class PipelineError(XrorError):
    pass


class EmptyUserId(PipelineError):
    pass


class BadProfile(PipelineError):
    exit_code = 1


class DuplicateUser(PipelineError):
    pass


class EmptyCorpus(PipelineError):
    pass


class InvalidAnonId(PipelineError):
    pass


class BadKey(PipelineError):
    exit_code = 1


class NotFound(PipelineError, LookupError):
    pass


class ClientError(PipelineError):
    pass


# exporters

class DegenerateQuaternion(XrorError, ValueError):
    pass
