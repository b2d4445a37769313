const note = function (req, res) {
  var note = req.note;
  record(note);
  res.write(escape(note));
};
